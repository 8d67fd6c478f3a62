#pragma once

// Discrete bounded Radon measures: atoms + integrable density + a
// divergence-form edge flux, with Jordan decomposition, total variation,
// grid loads and the truncation-based regularization.

#include <optional>

#include "oplab/assemble.hpp"
#include "oplab/grid.hpp"

namespace oplab {

struct Atom {
  std::array<double, 3> x{0, 0, 0};
  double weight = 0.0;
};

/// Per-edge flux field G; the measure it represents is F = -div G.
/// Values live on all lattice edges; edge (axis d, lower node id) keyed by
/// the lower endpoint's lattice id.
class EdgeFluxField {
 public:
  EdgeFluxField() = default;
  EdgeFluxField(const GridPtr& grid, const std::array<ScalarField, 3>& g_per_axis);

  double value(int axis, Index lower_node) const;
  const GridPtr& grid() const { return grid_; }

 private:
  GridPtr grid_;
  std::array<std::vector<double>, 3> values_;
};

class GridMeasure {
 public:
  explicit GridMeasure(GridPtr grid) : grid_(std::move(grid)) {}

  /// Atoms must lie in the closed box; an atom whose containing cell has no
  /// interior corner is rejected (PlacementError).
  GridMeasure& add_atom(const std::array<double, 3>& x, double weight);
  GridMeasure& set_density(GridFunction f);
  GridMeasure& set_flux(EdgeFluxField g);

  const GridPtr& grid() const { return grid_; }
  const std::vector<Atom>& atoms() const { return atoms_; }
  const std::optional<GridFunction>& density() const { return density_; }
  const std::optional<EdgeFluxField>& flux() const { return flux_; }

  /// Atom-free measures model the class that vanishes on zero-capacity sets.
  bool m0b() const { return atoms_.empty(); }

  static GridMeasure zero(const GridPtr& grid) { return GridMeasure(grid); }

 private:
  GridPtr grid_;
  std::vector<Atom> atoms_;
  std::optional<GridFunction> density_;
  std::optional<EdgeFluxField> flux_;
};

/// m = m+ - m-, both nonnegative, componentwise min(m+, m-) = 0.
std::pair<NodalMeasure, NodalMeasure> jordan_decompose(const NodalMeasure& m);

double total_variation(const NodalMeasure& m);
/// sum |atom weights| + sum |density| h^N + TV of the flux part's nodal load.
double total_variation(const GridMeasure& m);

/// Projection onto nodal masses: atoms split multilinearly over the corners
/// of their containing cell (shares on eliminated corners are dropped),
/// density contributes value*h^N per node, flux its discrete divergence.
NodalMeasure load_vector(const GridMeasure& m, const DomainGrid& grid);

double weak_star_pairing(const NodalMeasure& m, const GridFunction& phi);

struct LinearSolveConfig;  // elliptic.hpp

/// mu_k = op . T_k(u_mu) where op u_mu = load(mu). TV never grows.
NodalMeasure regularize_by_truncation(const GridMeasure& mu, double k,
                                      const AssembledOperator& op);
NodalMeasure regularize_by_truncation(const NodalMeasure& load_mu, double k,
                                      const AssembledOperator& op);

}  // namespace oplab
