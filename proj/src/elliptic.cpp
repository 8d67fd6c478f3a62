#include "oplab/elliptic.hpp"

#include <cmath>

namespace oplab {

namespace {

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void axpy(double a, const std::vector<double>& x, std::vector<double>& y) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

GridFunction solve_dense_path(const AssembledOperator& op, const NodalMeasure& b,
                              SolveStats* stats) {
  const auto n = static_cast<std::size_t>(op.n);
  std::vector<double> A(n * n, 0.0);
  for (Index i = 0; i < op.n; ++i)
    for (Index k = op.row_ptr[static_cast<std::size_t>(i)]; k < op.row_ptr[static_cast<std::size_t>(i) + 1]; ++k)
      A[static_cast<std::size_t>(i) * n + static_cast<std::size_t>(op.col[static_cast<std::size_t>(k)])] =
          op.val[static_cast<std::size_t>(k)];
  auto u = dense_solve(std::move(A), b.masses);
  if (stats) {
    stats->iterations = 1;
    const auto r = op.apply(u);
    std::vector<double> res(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) res[i] = r[i] - b[i];
    const double nb = max_abs(b.masses);
    stats->residual = nb > 0.0 ? max_abs(res) / nb : max_abs(res);
  }
  return GridFunction(std::move(u));
}

GridFunction solve_cg(const AssembledOperator& op, const NodalMeasure& b,
                      const LinearSolveConfig& cfg, SolveStats* stats,
                      const GridFunction* warm) {
  const auto n = static_cast<std::size_t>(op.n);
  std::vector<double> x = warm && warm->size() == n ? warm->values
                                                    : std::vector<double>(n, 0.0);
  std::vector<double> inv_diag(n);
  for (Index i = 0; i < op.n; ++i)
    inv_diag[static_cast<std::size_t>(i)] = 1.0 / op.diag(i);

  std::vector<double> r(n), z(n), p(n), q(n);
  op.apply(x, q);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - q[i];
  const double nb = std::max(max_abs(b.masses), 1e-300);
  double rn = max_abs(r);
  if (rn <= cfg.rel_tol * nb) {
    if (stats) { stats->iterations = 0; stats->residual = rn / nb; }
    return GridFunction(std::move(x));
  }
  for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
  p = z;
  double rz = dot(r, z);
  Index it = 0;
  for (; it < cfg.max_iter; ++it) {
    op.apply(p, q);
    const double pq = dot(p, q);
    if (pq == 0.0) break;
    const double alpha = rz / pq;
    axpy(alpha, p, x);
    axpy(-alpha, q, r);
    rn = max_abs(r);
    if (rn <= cfg.rel_tol * nb) {
      if (stats) { stats->iterations = it + 1; stats->residual = rn / nb; }
      return GridFunction(std::move(x));
    }
    for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  throw SolverError("cg failed to reach tolerance after " + std::to_string(it) +
                        " iterations",
                    rn / nb);
}

GridFunction solve_bicgstab(const AssembledOperator& op, const NodalMeasure& b,
                            const LinearSolveConfig& cfg, SolveStats* stats,
                            const GridFunction* warm) {
  const auto n = static_cast<std::size_t>(op.n);
  std::vector<double> x = warm && warm->size() == n ? warm->values
                                                    : std::vector<double>(n, 0.0);
  std::vector<double> inv_diag(n);
  for (Index i = 0; i < op.n; ++i)
    inv_diag[static_cast<std::size_t>(i)] = 1.0 / op.diag(i);

  std::vector<double> r(n), r0(n), p(n), v(n), s(n), t(n), ph(n), sh(n);
  op.apply(x, v);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - v[i];
  const double nb = std::max(max_abs(b.masses), 1e-300);
  double rn = max_abs(r);
  if (rn <= cfg.rel_tol * nb) {
    if (stats) { stats->iterations = 0; stats->residual = rn / nb; }
    return GridFunction(std::move(x));
  }
  r0 = r;
  double rho = 1.0, alpha = 1.0, omega = 1.0;
  std::fill(p.begin(), p.end(), 0.0);
  std::fill(v.begin(), v.end(), 0.0);
  Index it = 0;
  for (; it < cfg.max_iter; ++it) {
    const double rho_new = dot(r0, r);
    if (rho_new == 0.0) break;
    const double beta = (rho_new / rho) * (alpha / omega);
    rho = rho_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
    for (std::size_t i = 0; i < n; ++i) ph[i] = inv_diag[i] * p[i];
    op.apply(ph, v);
    alpha = rho / dot(r0, v);
    for (std::size_t i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
    if (max_abs(s) <= cfg.rel_tol * nb) {
      axpy(alpha, ph, x);
      op.apply(x, t);
      for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - t[i];
      rn = max_abs(r);
      if (stats) { stats->iterations = it + 1; stats->residual = rn / nb; }
      return GridFunction(std::move(x));
    }
    for (std::size_t i = 0; i < n; ++i) sh[i] = inv_diag[i] * s[i];
    op.apply(sh, t);
    const double tt = dot(t, t);
    if (tt == 0.0) break;
    omega = dot(t, s) / tt;
    for (std::size_t i = 0; i < n; ++i) x[i] += alpha * ph[i] + omega * sh[i];
    for (std::size_t i = 0; i < n; ++i) r[i] = s[i] - omega * t[i];
    rn = max_abs(r);
    if (rn <= cfg.rel_tol * nb) {
      if (stats) { stats->iterations = it + 1; stats->residual = rn / nb; }
      return GridFunction(std::move(x));
    }
    if (omega == 0.0) break;
  }
  throw SolverError("bicgstab failed to reach tolerance after " +
                        std::to_string(it) + " iterations",
                    rn / nb);
}

}  // namespace

std::vector<double> dense_solve(std::vector<double> a, std::vector<double> b) {
  const std::size_t n = b.size();
  std::vector<std::size_t> piv(n);
  for (std::size_t i = 0; i < n; ++i) piv[i] = i;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t pk = k;
    double best = std::abs(a[piv[k] * n + k]);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double cand = std::abs(a[piv[i] * n + k]);
      if (cand > best) { best = cand; pk = i; }
    }
    if (best == 0.0) throw SolverError("singular matrix in dense solve", 0.0);
    std::swap(piv[k], piv[pk]);
    const std::size_t rk = piv[k];
    for (std::size_t i = k + 1; i < n; ++i) {
      const std::size_t ri = piv[i];
      const double f = a[ri * n + k] / a[rk * n + k];
      a[ri * n + k] = f;
      for (std::size_t j = k + 1; j < n; ++j) a[ri * n + j] -= f * a[rk * n + j];
      b[ri] -= f * b[rk];
    }
  }
  std::vector<double> x(n, 0.0);
  for (std::size_t k = n; k-- > 0;) {
    const std::size_t rk = piv[k];
    double s = b[rk];
    for (std::size_t j = k + 1; j < n; ++j) s -= a[rk * n + j] * x[j];
    x[k] = s / a[rk * n + k];
  }
  return x;
}

GridFunction solve_linear(const AssembledOperator& op, const NodalMeasure& b,
                          const LinearSolveConfig& cfg, SolveStats* stats,
                          const GridFunction* warm_start) {
  cfg.validate();
  if (b.size() != static_cast<std::size_t>(op.n))
    throw ArgumentError("right-hand side size mismatch");
  for (double v : b.masses)
    if (!std::isfinite(v)) throw ArgumentError("right-hand side must be finite");

  switch (cfg.method) {
    case LinearSolveConfig::Method::dense:
      return solve_dense_path(op, b, stats);
    case LinearSolveConfig::Method::cg:
      return solve_cg(op, b, cfg, stats, warm_start);
    case LinearSolveConfig::Method::bicgstab:
      return solve_bicgstab(op, b, cfg, stats, warm_start);
    case LinearSolveConfig::Method::automatic:
      break;
  }
  if (op.n <= 400) return solve_dense_path(op, b, stats);
  if (op.symmetric) return solve_cg(op, b, cfg, stats, warm_start);
  return solve_bicgstab(op, b, cfg, stats, warm_start);
}

double duality_check(const AssembledOperator& op, const NodalMeasure& mu,
                     const GridFunction& g, const LinearSolveConfig& cfg) {
  const DomainGrid& grid = *op.grid;
  const double vol = grid.cell_volume();
  const GridFunction u_mu = solve_linear(op, mu, cfg);
  NodalMeasure g_load(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) g_load[i] = g[i] * vol;
  const AssembledOperator op_t = adjoint(op);
  const GridFunction u_star = solve_linear(op_t, g_load, cfg);
  double lhs = 0.0, rhs = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    lhs += u_mu[i] * g[i] * vol;
    rhs += u_star[i] * mu[i];
  }
  return std::abs(lhs - rhs);
}

SobolevNorms sobolev_norms(const GridFunction& u, const DomainGrid& g, double q) {
  if (!(q > 1.0)) throw ArgumentError("norm exponent q must be > 1");
  SobolevNorms out;
  if (g.dim >= 2 && q >= static_cast<double>(g.dim) / (g.dim - 1.0))
    out.q_outside_paper_range = true;
  const double vol = g.cell_volume();
  double lq = 0.0;
  for (double v : u.values) lq += std::pow(std::abs(v), q) * vol;
  out.lq = std::pow(lq, 1.0 / q);

  auto value_at = [&](Index id) -> double {
    const Index row = g.node_to_row[static_cast<std::size_t>(id)];
    return row >= 0 ? u[static_cast<std::size_t>(row)] : 0.0;
  };
  double w = 0.0;
  for (Index id = 0; id < g.lattice_count(); ++id) {
    const auto ijk = g.node_ijk(id);
    for (int d = 0; d < g.dim; ++d) {
      if (ijk[d] >= g.cells[d]) continue;
      const Index nb = g.neighbor(id, d, +1);
      const bool li = g.node_class(id) == NodeClass::interior;
      const bool ri = g.node_class(nb) == NodeClass::interior;
      if (!li && !ri) continue;
      const double slope = ((ri ? value_at(nb) : 0.0) - (li ? value_at(id) : 0.0)) / g.h;
      w += std::pow(std::abs(slope), q) * vol;
    }
  }
  out.w1q = std::pow(w, 1.0 / q);
  return out;
}

}  // namespace oplab
