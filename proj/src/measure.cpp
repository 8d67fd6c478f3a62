#include "oplab/measure.hpp"

#include <cmath>

#include "oplab/elliptic.hpp"

namespace oplab {

EdgeFluxField::EdgeFluxField(const GridPtr& grid,
                             const std::array<ScalarField, 3>& g_per_axis)
    : grid_(grid) {
  const DomainGrid& g = *grid;
  for (int d = 0; d < g.dim; ++d) {
    values_[d].assign(static_cast<std::size_t>(g.lattice_count()), 0.0);
    if (!g_per_axis[d]) continue;
    for (Index id = 0; id < g.lattice_count(); ++id) {
      const auto ijk = g.node_ijk(id);
      if (ijk[d] >= g.cells[d]) continue;  // no edge beyond the last node
      auto mid = g.node_coord(id);
      mid[d] += 0.5 * g.h;
      values_[d][static_cast<std::size_t>(id)] = g_per_axis[d](mid);
    }
  }
}

double EdgeFluxField::value(int axis, Index lower_node) const {
  if (values_[axis].empty()) return 0.0;
  return values_[axis][static_cast<std::size_t>(lower_node)];
}

GridMeasure& GridMeasure::add_atom(const std::array<double, 3>& x, double weight) {
  const DomainGrid& g = *grid_;
  if (!g.contains_point(x))
    throw PlacementError("atom lies outside the closed domain box");
  // locate the containing cell and require at least one interior corner
  std::array<Index, 3> base{0, 0, 0};
  for (int d = 0; d < g.dim; ++d) {
    auto i = static_cast<Index>(std::floor((x[d] - g.lo[d]) / g.h));
    base[d] = std::clamp<Index>(i, 0, g.cells[d] - 1);
  }
  bool any_interior = false;
  const Index corners = Index{1} << g.dim;
  for (Index c = 0; c < corners; ++c) {
    auto ijk = base;
    for (int d = 0; d < g.dim; ++d)
      if (c & (Index{1} << d)) ijk[d] += 1;
    if (g.node_class(g.node_id(ijk)) == NodeClass::interior) any_interior = true;
  }
  if (!any_interior)
    throw PlacementError("atom lies in an exterior cell (no interior corner)");
  atoms_.push_back(Atom{x, weight});
  return *this;
}

GridMeasure& GridMeasure::set_density(GridFunction f) {
  if (f.size() != static_cast<std::size_t>(grid_->interior_count()))
    throw ArgumentError("density size does not match the interior node count");
  density_ = std::move(f);
  return *this;
}

GridMeasure& GridMeasure::set_flux(EdgeFluxField g) {
  flux_ = std::move(g);
  return *this;
}

std::pair<NodalMeasure, NodalMeasure> jordan_decompose(const NodalMeasure& m) {
  NodalMeasure p(m.size()), q(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    p[i] = std::max(m[i], 0.0);
    q[i] = std::max(-m[i], 0.0);
  }
  return {std::move(p), std::move(q)};
}

double total_variation(const NodalMeasure& m) { return m.total_variation(); }

namespace {

NodalMeasure flux_load(const EdgeFluxField& flux, const DomainGrid& g) {
  NodalMeasure out(static_cast<std::size_t>(g.interior_count()));
  double area = 1.0;
  for (int d = 0; d < g.dim - 1; ++d) area *= g.h;  // h^(N-1)
  for (Index row = 0; row < g.interior_count(); ++row) {
    const Index id = g.row_to_node[static_cast<std::size_t>(row)];
    double s = 0.0;
    for (int d = 0; d < g.dim; ++d) {
      const Index lower = g.neighbor(id, d, -1);
      s += flux.value(d, lower) - flux.value(d, id);
    }
    out[static_cast<std::size_t>(row)] = s * area;
  }
  return out;
}

}  // namespace

double total_variation(const GridMeasure& m) {
  const DomainGrid& g = *m.grid();
  double tv = 0.0;
  for (const auto& a : m.atoms()) tv += std::abs(a.weight);
  if (m.density()) {
    const double vol = g.cell_volume();
    for (double f : m.density()->values) tv += std::abs(f) * vol;
  }
  if (m.flux()) tv += flux_load(*m.flux(), g).total_variation();
  return tv;
}

NodalMeasure load_vector(const GridMeasure& m, const DomainGrid& g) {
  if (m.grid()->dim != g.dim)
    throw ArgumentError("measure and grid dimensions disagree");
  NodalMeasure out(static_cast<std::size_t>(g.interior_count()));

  for (const auto& atom : m.atoms()) {
    std::array<Index, 3> base{0, 0, 0};
    std::array<double, 3> frac{0, 0, 0};
    for (int d = 0; d < g.dim; ++d) {
      double t = (atom.x[d] - g.lo[d]) / g.h;
      auto i = static_cast<Index>(std::floor(t));
      i = std::clamp<Index>(i, 0, g.cells[d] - 1);
      base[d] = i;
      frac[d] = std::clamp(t - static_cast<double>(i), 0.0, 1.0);
    }
    const Index corners = Index{1} << g.dim;
    for (Index c = 0; c < corners; ++c) {
      auto ijk = base;
      double w = 1.0;
      for (int d = 0; d < g.dim; ++d) {
        if (c & (Index{1} << d)) {
          ijk[d] += 1;
          w *= frac[d];
        } else {
          w *= 1.0 - frac[d];
        }
      }
      if (w == 0.0) continue;
      const Index id = g.node_id(ijk);
      if (g.node_class(id) == NodeClass::interior)
        out[static_cast<std::size_t>(g.node_to_row[static_cast<std::size_t>(id)])] += w * atom.weight;
    }
  }

  if (m.density()) {
    const double vol = g.cell_volume();
    for (std::size_t i = 0; i < m.density()->size(); ++i)
      out[i] += (*m.density())[i] * vol;
  }

  if (m.flux()) {
    const auto fl = flux_load(*m.flux(), g);
    for (std::size_t i = 0; i < fl.size(); ++i) out[i] += fl[i];
  }
  return out;
}

double weak_star_pairing(const NodalMeasure& m, const GridFunction& phi) {
  if (m.size() != phi.size())
    throw ArgumentError("pairing dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) s += phi[i] * m[i];
  return s;
}

NodalMeasure regularize_by_truncation(const GridMeasure& mu, double k,
                                      const AssembledOperator& op) {
  return regularize_by_truncation(load_vector(mu, *op.grid), k, op);
}

NodalMeasure regularize_by_truncation(const NodalMeasure& load_mu, double k,
                                      const AssembledOperator& op) {
  if (!(k > 0.0)) throw ArgumentError("truncation level k must be > 0");
  LinearSolveConfig cfg;
  const GridFunction u = solve_linear(op, load_mu, cfg);
  return op.apply(truncate(u, k));
}

}  // namespace oplab
