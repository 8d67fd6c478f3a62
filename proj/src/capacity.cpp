#include "oplab/capacity.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace oplab {

namespace {

double dist(const std::array<double, 3>& a, const std::array<double, 3>& b, int dim) {
  double s = 0.0;
  for (int d = 0; d < dim; ++d) s += (a[d] - b[d]) * (a[d] - b[d]);
  return std::sqrt(s);
}

// Solves K_FF u_F = -K_F,rest u_rest with every non-free value held fixed.
void solve_constrained(const AssembledOperator& op, const std::vector<char>& free,
                       std::vector<double>& u, const LinearSolveConfig& lin) {
  std::vector<Index> rows;
  std::vector<Index> to_sub(static_cast<std::size_t>(op.n), -1);
  for (Index i = 0; i < op.n; ++i)
    if (free[static_cast<std::size_t>(i)]) {
      to_sub[static_cast<std::size_t>(i)] = static_cast<Index>(rows.size());
      rows.push_back(i);
    }
  if (rows.empty()) return;

  AssembledOperator sub;
  sub.grid = op.grid;
  sub.n = static_cast<Index>(rows.size());
  sub.symmetric = op.symmetric;
  sub.row_ptr.assign(rows.size() + 1, 0);
  NodalMeasure rhs(rows.size());
  for (std::size_t s = 0; s < rows.size(); ++s) {
    const auto i = static_cast<std::size_t>(rows[s]);
    double r = 0.0;
    for (Index k = op.row_ptr[i]; k < op.row_ptr[i + 1]; ++k) {
      const auto j = static_cast<std::size_t>(op.col[static_cast<std::size_t>(k)]);
      if (free[j]) {
        sub.col.push_back(to_sub[j]);
        sub.val.push_back(op.val[static_cast<std::size_t>(k)]);
      } else {
        r -= op.val[static_cast<std::size_t>(k)] * u[j];
      }
    }
    rhs[s] = r;
    sub.row_ptr[s + 1] = static_cast<Index>(sub.col.size());
  }
  GridFunction warm(rows.size());
  for (std::size_t s = 0; s < rows.size(); ++s)
    warm[s] = u[static_cast<std::size_t>(rows[s])];
  const GridFunction sol = solve_linear(sub, rhs, lin, nullptr, &warm);
  for (std::size_t s = 0; s < rows.size(); ++s)
    u[static_cast<std::size_t>(rows[s])] = sol[s];
}

}  // namespace

GridSet::GridSet(GridPtr grid, std::vector<Index> rows)
    : grid_(std::move(grid)), rows_(std::move(rows)) {
  std::sort(rows_.begin(), rows_.end());
  rows_.erase(std::unique(rows_.begin(), rows_.end()), rows_.end());
  for (Index r : rows_)
    if (r < 0 || r >= grid_->interior_count())
      throw ArgumentError("grid set row index out of range");
}

GridSet GridSet::ball(const GridPtr& grid, const std::array<double, 3>& center, double r) {
  if (r < 0.0) throw ArgumentError("ball radius must be >= 0");
  std::vector<Index> rows;
  const double reach = r + grid->h / 2.0 + 1e-14;
  for (Index row = 0; row < grid->interior_count(); ++row)
    if (dist(grid->row_coord(row), center, grid->dim) <= reach) rows.push_back(row);
  return GridSet(grid, std::move(rows));
}

GridSet GridSet::box(const GridPtr& grid, const std::array<double, 3>& lo,
                     const std::array<double, 3>& hi) {
  std::vector<Index> rows;
  for (Index row = 0; row < grid->interior_count(); ++row) {
    const auto x = grid->row_coord(row);
    bool in = true;
    for (int d = 0; d < grid->dim; ++d)
      if (x[d] < lo[d] - 1e-14 || x[d] > hi[d] + 1e-14) in = false;
    if (in) rows.push_back(row);
  }
  return GridSet(grid, std::move(rows));
}

GridSet GridSet::points(const GridPtr& grid,
                        const std::vector<std::array<double, 3>>& pts) {
  std::vector<Index> rows;
  for (const auto& p : pts) {
    const Index id = grid->nearest_node(p);
    const Index row = grid->node_to_row[static_cast<std::size_t>(id)];
    if (row >= 0) rows.push_back(row);
  }
  return GridSet(grid, std::move(rows));
}

GridSet GridSet::unite(const GridSet& other) const {
  std::vector<Index> rows = rows_;
  rows.insert(rows.end(), other.rows_.begin(), other.rows_.end());
  return GridSet(grid_ ? grid_ : other.grid_, std::move(rows));
}

bool GridSet::contains(Index row) const {
  return std::binary_search(rows_.begin(), rows_.end(), row);
}

bool GridSet::subset_of(const GridSet& other) const {
  return std::includes(other.rows_.begin(), other.rows_.end(), rows_.begin(),
                       rows_.end());
}

namespace {

std::vector<double> parse_numbers(const std::string& s) {
  std::vector<double> out;
  std::istringstream is(s);
  double v;
  while (is >> v) out.push_back(v);
  return out;
}

std::array<double, 3> to_point(const std::vector<double>& v, int dim,
                               const std::string& what) {
  if (static_cast<int>(v.size()) != dim)
    throw ParseError(what + ": expected " + std::to_string(dim) + " coordinates");
  std::array<double, 3> p{0, 0, 0};
  for (int d = 0; d < dim; ++d) p[d] = v[static_cast<std::size_t>(d)];
  return p;
}

}  // namespace

GridSet GridSet::parse(const GridPtr& grid, const std::string& literal) {
  const auto open = literal.find('(');
  if (open == std::string::npos || literal.back() != ')')
    throw ParseError("malformed grid set literal: " + literal);
  std::string head = literal.substr(0, open);
  head.erase(std::remove_if(head.begin(), head.end(), ::isspace), head.end());
  const std::string body = literal.substr(open + 1, literal.size() - open - 2);
  const int dim = grid->dim;

  if (head == "ball") {
    const auto comma = body.find(',');
    if (comma == std::string::npos) throw ParseError("ball literal needs 'center, r'");
    const auto c = to_point(parse_numbers(body.substr(0, comma)), dim, "ball center");
    const auto rv = parse_numbers(body.substr(comma + 1));
    if (rv.size() != 1) throw ParseError("ball literal needs one radius");
    return ball(grid, c, rv[0]);
  }
  if (head == "box") {
    const auto comma = body.find(',');
    if (comma == std::string::npos) throw ParseError("box literal needs 'lo, hi'");
    return box(grid, to_point(parse_numbers(body.substr(0, comma)), dim, "box lo"),
               to_point(parse_numbers(body.substr(comma + 1)), dim, "box hi"));
  }
  if (head == "points") {
    std::vector<std::array<double, 3>> pts;
    std::size_t pos = 0;
    while ((pos = body.find('(', pos)) != std::string::npos) {
      const auto end = body.find(')', pos);
      if (end == std::string::npos) throw ParseError("unbalanced points literal");
      pts.push_back(to_point(parse_numbers(body.substr(pos + 1, end - pos - 1)), dim,
                             "point"));
      pos = end + 1;
    }
    if (pts.empty()) throw ParseError("points literal is empty");
    return points(grid, pts);
  }
  if (head == "union") {
    GridSet acc(grid, {});
    std::size_t start = 0;
    int depth = 0;
    for (std::size_t i = 0; i <= body.size(); ++i) {
      if (i == body.size() || (body[i] == ';' && depth == 0)) {
        std::string part = body.substr(start, i - start);
        const auto b = part.find_first_not_of(" \t");
        if (b != std::string::npos) {
          part = part.substr(b);
          acc = acc.unite(parse(grid, part));
        }
        start = i + 1;
      } else if (body[i] == '(') {
        ++depth;
      } else if (body[i] == ')') {
        --depth;
      }
    }
    return acc;
  }
  throw ParseError("unknown grid set kind: " + head);
}

ViSolution capacitary_potential(const AssembledOperator& op, const GridSet& E,
                                const LinearSolveConfig& cfg) {
  const auto n = static_cast<std::size_t>(op.n);
  ViSolution sol;
  sol.method = ViMethod::active_set;
  sol.psi = ExtendedGridFunction(n, kNegInf);
  sol.u = GridFunction(n, 0.0);
  sol.lambda = NodalMeasure(n, 0.0);
  sol.scale = std::max(op.max_diag(), 1e-300);
  if (E.empty()) return sol;

  std::vector<char> free(n, 1);
  for (Index r : E.rows()) {
    free[static_cast<std::size_t>(r)] = 0;
    sol.u[static_cast<std::size_t>(r)] = 1.0;
    sol.psi[static_cast<std::size_t>(r)] = 1.0;
  }
  solve_constrained(op, free, sol.u.values, cfg);
  sol.lambda = op.apply(sol.u);
  sol.iterations = 1;
  Index contact = 0;
  for (Index r : E.rows())
    if (sol.lambda[static_cast<std::size_t>(r)] > 1e-10 * sol.scale) ++contact;
  sol.contact_count = contact;
  double feas = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = sol.psi[i];
    if (std::isfinite(p)) feas = std::max(feas, p - sol.u[i]);
  }
  sol.feas_residual = feas;
  sol.compl_residual = 0.0;  // u = psi exactly on E
  return sol;
}

double capacity(const AssembledOperator& op, const GridSet& E,
                const LinearSolveConfig& cfg) {
  if (!op.symmetric)
    throw SymmetryError(
        "capacity requires a symmetric operator; use the adjoint potential pathway");
  const ViSolution pot = capacitary_potential(op, E, cfg);
  const NodalMeasure Ku = op.apply(pot.u);
  double energy = 0.0;
  for (std::size_t i = 0; i < Ku.size(); ++i) energy += Ku[i] * pot.u[i];
  return energy;
}

PointCapacityTable point_capacity_decay(
    const std::vector<const AssembledOperator*>& ops, const std::array<double, 3>& x0) {
  if (ops.empty()) throw ArgumentError("empty operator family");
  const int dim = ops.front()->grid->dim;
  if (dim < 2)
    throw ArgumentError("point capacity decay is undefined in 1-D (points have "
                        "positive capacity there)");
  PointCapacityTable table;
  for (const auto* op : ops) {
    PointCapacityRow row;
    row.level = op->grid->level;
    row.h = op->grid->h;
    row.cap = capacity(*op, GridSet::points(op->grid, {x0}));
    table.rows.push_back(row);
  }
  table.strictly_decreasing = true;
  for (std::size_t i = 1; i < table.rows.size(); ++i)
    if (!(table.rows[i].cap < table.rows[i - 1].cap))
      table.strictly_decreasing = false;

  table.decay_model_ok = table.rows.size() >= 3;
  const std::size_t m = table.rows.size();
  for (std::size_t i = m >= 3 ? m - 2 : m; i < m; ++i) {
    const auto& a = table.rows[i - 1];
    const auto& b = table.rows[i];
    if (dim == 2) {
      // cap ~ 2 pi / (log(1/h) + c): successive 2pi/cap differences ~ log 2
      const double diff = 2.0 * M_PI / b.cap - 2.0 * M_PI / a.cap;
      if (std::abs(diff - std::log(2.0)) > 0.25 * std::log(2.0))
        table.decay_model_ok = false;
    } else {
      const double ratio = b.cap / a.cap;
      if (std::abs(ratio - 0.5) > 0.25 * 0.5) table.decay_model_ok = false;
    }
  }
  return table;
}

int cm_required_level(int n) {
  const double rn = std::pow(1.0 / (2.0 * n), 3.0);
  int level = 0;
  while (std::pow(0.5, level) >= rn) ++level;
  return level;
}

CmScenario cm_scenario(const AssembledOperator& op, int n, const CmOptions& opts,
                       const LinearSolveConfig& cfg) {
  const DomainGrid& g = *op.grid;
  if (g.dim != 3) throw ArgumentError("the tiled two-ball construction needs N = 3");
  if (n < 1) throw ArgumentError("tile count n must be >= 1");
  for (int d = 0; d < 3; ++d)
    if (std::abs(g.lo[d]) > 1e-12 || std::abs(g.hi[d] - 1.0) > 1e-12)
      throw ArgumentError("the tiled construction is defined on the unit cube");

  CmScenario out;
  out.n = n;
  out.r_inner = std::pow(1.0 / (2.0 * n), 3.0);
  out.resolved = g.h < out.r_inner;
  if (!out.resolved && !opts.allow_degenerate)
    throw ResolutionError("h >= inner radius; refine to level " +
                              std::to_string(cm_required_level(n)),
                          cm_required_level(n));

  const auto nn = static_cast<std::size_t>(g.interior_count());
  out.w = GridFunction(nn, 0.0);
  std::vector<double> psi(nn, 0.0);
  const double R = 1.0 / (2.0 * n);

  // The potentials must vanish wherever the domain's Dirichlet boundary acts,
  // or the data would leak mass through it and stop pairing to zero against
  // constants (the inscribed balls of the outer cubes touch the faces).
  std::vector<char> away_from_boundary(nn, 1);
  for (Index row = 0; row < g.interior_count(); ++row) {
    const Index id = g.row_to_node[static_cast<std::size_t>(row)];
    for (int d = 0; d < 3; ++d)
      for (int dir : {-1, +1})
        if (g.node_class(g.neighbor(id, d, dir)) != NodeClass::interior)
          away_from_boundary[static_cast<std::size_t>(row)] = 0;
  }

  std::vector<char> free(nn);
  for (int ci = 0; ci < n; ++ci)
    for (int cj = 0; cj < n; ++cj)
      for (int ck = 0; ck < n; ++ck) {
        std::array<double, 3> c{(2.0 * ci + 1.0) / (2.0 * n),
                                (2.0 * cj + 1.0) / (2.0 * n),
                                (2.0 * ck + 1.0) / (2.0 * n)};
        // cube centers for odd n are not lattice points; snap
        const auto csnap = g.node_coord(g.nearest_node(c));
        std::vector<Index> inner;
        std::fill(free.begin(), free.end(), 0);
        bool any_free = false;
        for (Index row = 0; row < g.interior_count(); ++row) {
          if (!away_from_boundary[static_cast<std::size_t>(row)]) continue;
          const double d = dist(g.row_coord(row), csnap, 3);
          if (d <= out.r_inner + 1e-14) {
            inner.push_back(row);
          } else if (d < R - 1e-14) {
            free[static_cast<std::size_t>(row)] = 1;
            any_free = true;
          }
        }
        if (inner.empty())
          inner.push_back(g.node_to_row[static_cast<std::size_t>(g.nearest_node(csnap))]);
        for (Index r : inner) {
          free[static_cast<std::size_t>(r)] = 0;
          out.w[static_cast<std::size_t>(r)] = 1.0;
          psi[static_cast<std::size_t>(r)] = 1.0;
        }
        if (any_free) solve_constrained(op, free, out.w.values, cfg);
      }

  out.psi = ExtendedGridFunction(std::move(psi));
  const NodalMeasure Kw = op.apply(out.w);
  out.mu = NodalMeasure(nn);
  for (std::size_t i = 0; i < nn; ++i) out.mu[i] = -Kw[i];
  return out;
}

NamedObstacleResult named_obstacle_log_1d(const GridPtr& grid) {
  if (grid->dim != 1) throw ArgumentError("log obstacle is one-dimensional");
  if (std::abs(grid->lo[0] + 1.0) > 1e-12 || std::abs(grid->hi[0] - 1.0) > 1e-12)
    throw ArgumentError("log obstacle is defined on (-1, 1)");
  NamedObstacleResult out;
  const auto n = static_cast<std::size_t>(grid->interior_count());
  std::vector<double> psi(n), dens(n);
  for (Index row = 0; row < grid->interior_count(); ++row) {
    const double x = std::abs(grid->row_coord(row)[0]);
    psi[static_cast<std::size_t>(row)] = (1.0 - x) * (1.0 - std::log(1.0 - x));
    dens[static_cast<std::size_t>(row)] = 1.0 / (1.0 - x);
  }
  out.psi = ExtendedGridFunction(std::move(psi));
  out.reference_density = GridFunction(std::move(dens));
  out.has_reference = true;
  return out;
}

NamedObstacleResult named_obstacle_green_pole(const AssembledOperator& op,
                                              const std::array<double, 3>& pole,
                                              const LinearSolveConfig& cfg) {
  GridMeasure delta(op.grid);
  delta.add_atom(pole, 1.0);
  NamedObstacleResult out;
  out.psi = ExtendedGridFunction(solve_linear(op, load_vector(delta, *op.grid), cfg).values);
  return out;
}

NamedObstacleResult named_obstacle_constant(const GridPtr& grid, double value) {
  NamedObstacleResult out;
  out.psi = ExtendedGridFunction(static_cast<std::size_t>(grid->interior_count()), value);
  return out;
}

std::vector<GridFunction> bump_panel(const DomainGrid& g) {
  static const double widths[5] = {0.48, 0.42, 0.36, 0.30, 0.24};
  double ext = g.hi[0] - g.lo[0];
  std::array<double, 3> c{0, 0, 0};
  for (int d = 0; d < g.dim; ++d) {
    ext = std::min(ext, g.hi[d] - g.lo[d]);
    c[d] = 0.5 * (g.lo[d] + g.hi[d]);
  }
  std::vector<GridFunction> panel;
  for (double wf : widths) {
    const double w = wf * ext;
    GridFunction phi(static_cast<std::size_t>(g.interior_count()));
    for (Index row = 0; row < g.interior_count(); ++row) {
      const auto x = g.row_coord(row);
      double v = 1.0;
      for (int d = 0; d < g.dim; ++d) {
        const double t = 1.0 - ((x[d] - c[d]) / w) * ((x[d] - c[d]) / w);
        v *= t > 0.0 ? t * t : 0.0;
      }
      phi[static_cast<std::size_t>(row)] = v;
    }
    panel.push_back(std::move(phi));
  }
  return panel;
}

}  // namespace oplab
