#pragma once

// Capacitary potentials, set capacities, and the generators behind the
// named refinement studies (tiled two-ball data, log obstacle, Green poles).

#include "oplab/obstacle.hpp"

namespace oplab {

/// A set of interior nodes, kept as sorted row indices.
class GridSet {
 public:
  GridSet() = default;
  GridSet(GridPtr grid, std::vector<Index> rows);

  /// Nodes within r + h/2 of the center: a node belongs when the half-spacing
  /// ball around it touches the target ball, so the discrete boundary ring
  /// counts as inside.
  static GridSet ball(const GridPtr& grid, const std::array<double, 3>& center, double r);
  static GridSet box(const GridPtr& grid, const std::array<double, 3>& lo,
                     const std::array<double, 3>& hi);
  static GridSet points(const GridPtr& grid,
                        const std::vector<std::array<double, 3>>& pts);
  GridSet unite(const GridSet& other) const;

  /// Parses "ball(cx cy [cz], r)", "box(lo..., hi...)",
  /// "points((x y [z]) (x y [z]) ...)" and "union(lit; lit; ...)".
  static GridSet parse(const GridPtr& grid, const std::string& literal);

  const std::vector<Index>& rows() const { return rows_; }
  const GridPtr& grid() const { return grid_; }
  bool empty() const { return rows_.empty(); }
  bool contains(Index row) const;
  bool subset_of(const GridSet& other) const;

 private:
  GridPtr grid_;
  std::vector<Index> rows_;
};

/// Potential of E: u = 1 on E, op-harmonic and minimal outside, 0 <= u <= 1;
/// the reaction op.u is supported in E. E empty gives the zero solution.
ViSolution capacitary_potential(const AssembledOperator& op, const GridSet& E,
                                const LinearSolveConfig& cfg = {});

/// Dirichlet energy <op w, w> of the capacitary potential; equals the
/// reaction mass. Requires a symmetric operator.
double capacity(const AssembledOperator& op, const GridSet& E,
                const LinearSolveConfig& cfg = {});

struct PointCapacityRow {
  int level = 0;
  double h = 0.0;
  double cap = 0.0;
};

struct PointCapacityTable {
  std::vector<PointCapacityRow> rows;
  bool strictly_decreasing = false;
  bool decay_model_ok = false;  // ~1/log in 2-D, ~h in 3-D, within 25%
};

/// Capacity of the nearest node to x0 across an operator family, one per
/// refinement level. 1-D is rejected: points there have capacity O(1).
PointCapacityTable point_capacity_decay(
    const std::vector<const AssembledOperator*>& ops, const std::array<double, 3>& x0);

struct CmScenario {
  ExtendedGridFunction psi;   // 1 on the union of inner balls, 0 elsewhere
  NodalMeasure mu;            // balanced two-ball dipole data
  GridFunction w;             // the tiled potential generating mu
  double r_inner = 0.0;       // (1/2n)^(N/(N-2))
  int n = 0;
  bool resolved = false;      // h < r_inner
};

struct CmOptions {
  // Under-resolved inner balls degenerate to their snapped center node
  // instead of raising the resolution error.
  bool allow_degenerate = false;
};

/// Tiles the unit cube into n^3 cells; per cell the potential of the inner
/// ball relative to the inscribed ball, zero outside. Requires N = 3.
CmScenario cm_scenario(const AssembledOperator& op, int n, const CmOptions& opts = {},
                       const LinearSolveConfig& cfg = {});

/// Minimal level with h < r_inner for the given n.
int cm_required_level(int n);

enum class NamedObstacle { log_obstacle_1d, green_pole, constant };

struct NamedObstacleResult {
  ExtendedGridFunction psi;
  GridFunction reference_density;  // log obstacle: the exact reaction density
  bool has_reference = false;
};

NamedObstacleResult named_obstacle_log_1d(const GridPtr& grid);
NamedObstacleResult named_obstacle_green_pole(const AssembledOperator& op,
                                              const std::array<double, 3>& pole,
                                              const LinearSolveConfig& cfg = {});
NamedObstacleResult named_obstacle_constant(const GridPtr& grid, double value);

/// Five concentric polynomial bumps at the box center, widths
/// {0.48, 0.42, 0.36, 0.30, 0.24} x min extent; the weak-* certification panel.
std::vector<GridFunction> bump_panel(const DomainGrid& grid);

}  // namespace oplab
