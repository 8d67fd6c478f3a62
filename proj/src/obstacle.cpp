#include "oplab/obstacle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace oplab {

namespace {

double load_scale(const NodalMeasure& b) {
  return std::max(b.max_abs(), 1e-300);
}

// Projected residual: reaction positivity on contact, plain residual off it.
double projected_residual(const AssembledOperator& op, const std::vector<double>& u,
                          const ExtendedGridFunction& psi, const NodalMeasure& b,
                          std::vector<double>* lambda_out = nullptr) {
  const auto n = static_cast<std::size_t>(op.n);
  std::vector<double> lam = op.apply(u);
  for (std::size_t i = 0; i < n; ++i) lam[i] -= b[i];
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = psi[i];
    const bool contact = std::isfinite(p) && u[i] - p <= 1e-12 * std::max(1.0, std::abs(p));
    const double viol = contact ? std::max(0.0, -lam[i]) : std::abs(lam[i]);
    worst = std::max(worst, viol);
  }
  if (lambda_out) *lambda_out = std::move(lam);
  return worst;
}

ViSolution finalize(const AssembledOperator& op, const NodalMeasure& b,
                    const ExtendedGridFunction& psi, std::vector<double> u,
                    Index iterations, ViMethod method) {
  ViSolution sol;
  sol.method = method;
  sol.iterations = iterations;
  sol.scale = load_scale(b);
  sol.psi = psi;
  std::vector<double> lam = op.apply(u);
  for (std::size_t i = 0; i < lam.size(); ++i) lam[i] -= b[i];

  double compl_sum = 0.0, feas = 0.0;
  Index contact = 0;
  for (std::size_t i = 0; i < lam.size(); ++i) {
    const double p = psi[i];
    if (!std::isfinite(p)) continue;
    compl_sum += lam[i] * (u[i] - p);
    feas = std::max(feas, p - u[i]);
    if (u[i] - p <= 1e-12 * std::max({1.0, std::abs(p), std::abs(u[i])}) &&
        lam[i] > 1e-10 * sol.scale)
      ++contact;
  }
  sol.compl_residual = compl_sum;
  sol.feas_residual = std::max(feas, 0.0);
  sol.contact_count = contact;
  double worst = 0.0;
  for (std::size_t i = 0; i < lam.size(); ++i) {
    const double p = psi[i];
    const bool on_contact =
        std::isfinite(p) && u[i] - p <= 1e-12 * std::max(1.0, std::abs(p));
    worst = std::max(worst, on_contact ? std::max(0.0, -lam[i]) : std::abs(lam[i]));
  }
  sol.proj_residual = worst / sol.scale;
  sol.u = GridFunction(std::move(u));
  sol.lambda = NodalMeasure(std::move(lam));
  return sol;
}

ViSolution solve_psor(const AssembledOperator& op, const NodalMeasure& b,
                      const ExtendedGridFunction& psi, const ViConfig& cfg,
                      const ViSolution* warm) {
  const auto n = static_cast<std::size_t>(op.n);
  std::vector<double> u =
      warm && warm->u.size() == n ? warm->u.values : std::vector<double>(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    if (std::isfinite(psi[i])) u[i] = std::max(u[i], psi[i]);

  std::vector<double> diag(n);
  for (Index i = 0; i < op.n; ++i) diag[static_cast<std::size_t>(i)] = op.diag(i);

  const double tol = cfg.tol * load_scale(b);
  double res = 0.0;
  for (Index sweep = 0; sweep < cfg.max_iter; ++sweep) {
    for (Index i = 0; i < op.n; ++i) {
      double r = b[static_cast<std::size_t>(i)];
      for (Index k = op.row_ptr[static_cast<std::size_t>(i)]; k < op.row_ptr[static_cast<std::size_t>(i) + 1]; ++k)
        r -= op.val[static_cast<std::size_t>(k)] * u[static_cast<std::size_t>(op.col[static_cast<std::size_t>(k)])];
      double ui = u[static_cast<std::size_t>(i)] + cfg.omega * r / diag[static_cast<std::size_t>(i)];
      const double p = psi[static_cast<std::size_t>(i)];
      if (std::isfinite(p)) ui = std::max(ui, p);
      u[static_cast<std::size_t>(i)] = ui;
    }
    res = projected_residual(op, u, psi, b);
    if (res <= tol) return finalize(op, b, psi, std::move(u), sweep + 1, ViMethod::psor);
  }
  throw SolverError("psor failed to converge: projected residual " + std::to_string(res),
                    res);
}

// Reduced solve on the inactive set with active nodes pinned at psi.
void solve_reduced(const AssembledOperator& op, const NodalMeasure& b,
                   const ExtendedGridFunction& psi, const std::vector<char>& active,
                   const LinearSolveConfig& lin, std::vector<double>& u) {
  const auto n = static_cast<std::size_t>(op.n);
  std::vector<Index> to_sub(n, -1), rows;
  for (std::size_t i = 0; i < n; ++i) {
    if (active[i]) {
      u[i] = psi[i];
    } else {
      to_sub[i] = static_cast<Index>(rows.size());
      rows.push_back(static_cast<Index>(i));
    }
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
    double r = b[i];
    for (Index k = op.row_ptr[i]; k < op.row_ptr[i + 1]; ++k) {
      const auto j = static_cast<std::size_t>(op.col[static_cast<std::size_t>(k)]);
      if (active[j]) {
        r -= op.val[static_cast<std::size_t>(k)] * psi[j];
      } else {
        sub.col.push_back(to_sub[j]);
        sub.val.push_back(op.val[static_cast<std::size_t>(k)]);
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

ViSolution solve_active_set(const AssembledOperator& op, const NodalMeasure& b,
                            const ExtendedGridFunction& psi, const ViConfig& cfg,
                            const ViSolution* warm) {
  const auto n = static_cast<std::size_t>(op.n);
  const double sb = load_scale(b);

  std::vector<char> active(n, 0);
  std::vector<double> u(n, 0.0);
  if (warm && warm->u.size() == n) {
    u = warm->u.values;
    for (std::size_t i = 0; i < n; ++i)
      active[i] = std::isfinite(psi[i]) &&
                  u[i] - psi[i] <= 1e-12 * std::max(1.0, std::abs(psi[i])) &&
                  warm->lambda[i] > 0.0;
  }

  LinearSolveConfig lin = cfg.linear;
  lin.rel_tol = std::min(lin.rel_tol, std::max(cfg.tol * 1e-2, 1e-13));

  const auto cap = static_cast<std::size_t>(std::max<double>(
      1.0, std::ceil(cfg.active_set_change_cap * static_cast<double>(n))));

  struct Change {
    double viol;
    Index i;
    bool add;
  };
  std::vector<Change> changes;
  std::vector<double> lam;

  for (Index it = 0; it < cfg.max_active_set_iter; ++it) {
    solve_reduced(op, b, psi, active, lin, u);
    lam = op.apply(u);
    for (std::size_t i = 0; i < n; ++i) lam[i] -= b[i];

    changes.clear();
    const double drop_tol = 5e-11 * sb;
    double su = 1.0;
    for (double v : u) su = std::max(su, std::abs(v));
    const double add_tol = 1e-12 * su;
    for (std::size_t i = 0; i < n; ++i) {
      const double p = psi[i];
      if (!std::isfinite(p)) continue;
      if (active[i]) {
        if (lam[i] < -drop_tol)
          changes.push_back({-lam[i], static_cast<Index>(i), false});
      } else if (u[i] < p - add_tol) {
        changes.push_back({p - u[i], static_cast<Index>(i), true});
      }
    }
    if (changes.empty())
      return finalize(op, b, psi, std::move(u), it + 1, ViMethod::active_set);
    if (changes.size() > cap) {
      std::sort(changes.begin(), changes.end(), [](const Change& a, const Change& c) {
        if (a.viol != c.viol) return a.viol > c.viol;
        return a.i < c.i;
      });
      changes.resize(cap);
    }
    for (const auto& ch : changes) active[static_cast<std::size_t>(ch.i)] = ch.add ? 1 : 0;
  }
  const double res = projected_residual(op, u, psi, b);
  throw SolverError("active-set solver failed to settle: projected residual " +
                        std::to_string(res),
                    res);
}

}  // namespace

ViSolution solve_vi(const AssembledOperator& op, const GridMeasure& mu,
                    const ExtendedGridFunction& psi, const ViConfig& cfg,
                    const ViSolution* warm) {
  return solve_vi(op, load_vector(mu, *op.grid), psi, cfg, warm);
}

ViSolution solve_vi(const AssembledOperator& op, const NodalMeasure& b,
                    const ExtendedGridFunction& psi, const ViConfig& cfg,
                    const ViSolution* warm) {
  cfg.validate();
  if (psi.size() != static_cast<std::size_t>(op.n) || b.size() != psi.size())
    throw ArgumentError("obstacle/load size mismatch");
  if (cfg.method == ViMethod::psor) return solve_psor(op, b, psi, cfg, warm);
  return solve_active_set(op, b, psi, cfg, warm);
}

GridFunction check_dominating(const AssembledOperator& op, const NodalMeasure& rho_load,
                              const ExtendedGridFunction& psi,
                              const LinearSolveConfig& cfg) {
  const GridFunction u_rho = solve_linear(op, rho_load, cfg);
  for (std::size_t i = 0; i < psi.size(); ++i) {
    const double p = psi[i];
    if (std::isfinite(p) && u_rho[i] < p - 1e-10 * std::max(1.0, std::abs(p)))
      throw FeasibilityError("dominating measure does not cover the obstacle");
  }
  return u_rho;
}

NodalMeasure reaction(const AssembledOperator& op, const GridFunction& u,
                      const GridMeasure& mu) {
  return reaction(op, u, load_vector(mu, *op.grid));
}

NodalMeasure reaction(const AssembledOperator& op, const GridFunction& u,
                      const NodalMeasure& load_mu) {
  NodalMeasure lam = op.apply(u);
  for (std::size_t i = 0; i < lam.size(); ++i) lam[i] -= load_mu[i];
  return lam;
}

MassBoundReport check_mass_bound(const ViSolution& sol, const GridMeasure& mu,
                                 const GridMeasure& rho) {
  const DomainGrid& g = *mu.grid();
  return check_mass_bound(sol, load_vector(mu, g), load_vector(rho, g));
}

MassBoundReport check_mass_bound(const ViSolution& sol, const NodalMeasure& load_mu,
                                 const NodalMeasure& load_rho) {
  MassBoundReport rep;
  rep.mass_lambda = sol.lambda.total_mass();
  double tv_minus = 0.0;
  for (std::size_t i = 0; i < load_mu.size(); ++i)
    tv_minus += std::max(0.0, load_rho[i] - load_mu[i]);
  rep.tv_bound = tv_minus;
  rep.slack = rep.tv_bound - rep.mass_lambda;
  rep.pass = rep.mass_lambda <= rep.tv_bound * (1.0 + 1e-8) + 1e-10;
  return rep;
}

MinimalityReport check_minimality(const ViSolution& sol, const AssembledOperator& op,
                                  const GridMeasure& mu, const ExtendedGridFunction& psi,
                                  const std::vector<GridMeasure>& samples,
                                  const LinearSolveConfig& cfg) {
  MinimalityReport rep;
  const GridFunction u_mu = solve_linear(op, load_vector(mu, *op.grid), cfg);
  for (const auto& nu : samples) {
    const NodalMeasure load_nu = load_vector(nu, *op.grid);
    for (double m : load_nu.masses)
      if (m < -1e-12 * sol.scale)
        throw ArgumentError("minimality samples must be nonnegative measures");
    const GridFunction u_nu = solve_linear(op, load_nu, cfg);
    bool feasible = true;
    for (std::size_t i = 0; i < psi.size(); ++i) {
      const double p = psi[i];
      if (std::isfinite(p) && u_mu[i] + u_nu[i] < p) {
        feasible = false;
        break;
      }
    }
    if (!feasible) {
      ++rep.skipped_infeasible;
      continue;
    }
    ++rep.checked;
    for (std::size_t i = 0; i < psi.size(); ++i)
      rep.max_violation =
          std::max(rep.max_violation, sol.u[i] - (u_mu[i] + u_nu[i]));
  }
  rep.pass = rep.max_violation <= 1e-8 * std::max(1.0, sol.scale);
  return rep;
}

ComparisonReport compare_reactions(const AssembledOperator& op, const GridMeasure& mu1,
                                   const GridMeasure& mu2, const ExtendedGridFunction& psi,
                                   const ViConfig& cfg) {
  const NodalMeasure b1 = load_vector(mu1, *op.grid);
  const NodalMeasure b2 = load_vector(mu2, *op.grid);
  const double s = std::max(load_scale(b1), load_scale(b2));
  for (std::size_t i = 0; i < b1.size(); ++i)
    if (b1[i] > b2[i] + 1e-12 * s)
      throw ArgumentError("ordered data required: load(mu1) <= load(mu2)");
  for (std::size_t i = 0; i < psi.size(); ++i)
    if (std::isfinite(psi[i]) && psi[i] > 0.0)
      throw ArgumentError("comparison lemma requires psi <= 0");

  const ViSolution s1 = solve_vi(op, b1, psi, cfg);
  const ViSolution s2 = solve_vi(op, b2, psi, cfg);
  ComparisonReport rep;
  for (std::size_t i = 0; i < b1.size(); ++i) {
    rep.max_lambda_violation = std::max(rep.max_lambda_violation, s2.lambda[i] - s1.lambda[i]);
    rep.max_u_violation = std::max(rep.max_u_violation, s1.u[i] - s2.u[i]);
  }
  const double tol = 1e-8 * std::max(1.0, s);
  rep.pass = rep.max_lambda_violation <= tol && rep.max_u_violation <= tol;
  return rep;
}

TruncationSolve solve_op_by_truncation(const AssembledOperator& op, const GridMeasure& mu,
                                       const ExtendedGridFunction& psi,
                                       const GridMeasure& rho,
                                       const std::vector<double>& schedule,
                                       const ViConfig& cfg, double trace_q) {
  if (schedule.empty()) throw ArgumentError("empty truncation schedule");
  for (std::size_t i = 1; i < schedule.size(); ++i)
    if (!(schedule[i] > schedule[i - 1]))
      throw ArgumentError("truncation schedule must be strictly increasing");

  const DomainGrid& g = *op.grid;
  const NodalMeasure load_mu = load_vector(mu, g);
  const NodalMeasure load_rho = load_vector(rho, g);
  NodalMeasure diff(load_mu.size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = load_mu[i] - load_rho[i];
  const GridFunction u_diff = solve_linear(op, diff, cfg.linear);

  TruncationSolve out;
  std::vector<GridFunction> iterates;
  ViSolution prev;
  bool have_prev = false;
  for (double k : schedule) {
    const NodalMeasure reg = op.apply(truncate(u_diff, k));
    NodalMeasure data(reg.size());
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = reg[i] + load_rho[i];
    ViSolution sol = solve_vi(op, data, psi, cfg, have_prev ? &prev : nullptr);
    TruncationTraceRow row;
    row.k = k;
    row.mass_lambda = sol.lambda.total_mass();
    row.tv_data = reg.total_variation();
    out.trace.push_back(row);
    iterates.push_back(sol.u);
    prev = std::move(sol);
    have_prev = true;
  }
  out.final = std::move(prev);
  for (std::size_t t = 0; t < iterates.size(); ++t) {
    GridFunction d(iterates[t].size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = iterates[t][i] - out.final.u[i];
    out.trace[t].w1q_gap = sobolev_norms(d, g, trace_q).w1q;
  }
  return out;
}

double entropy_residual(const AssembledOperator& op, const ViSolution& sol,
                        const GridFunction& f, const EdgeFluxField* flux,
                        const GridFunction& v, double j) {
  if (!(j > 0.0)) throw ArgumentError("entropy level j must be > 0");
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double p = sol.psi[i];
    if (std::isfinite(p) && v[i] < p - 1e-12 * std::max(1.0, std::abs(p)))
      throw ArgumentError("entropy test function must satisfy v >= psi");
  }
  const DomainGrid& g = *op.grid;
  std::vector<double> t(v.size());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = v[i] - sol.u[i];
  t = truncate(t, j);

  const NodalMeasure Ku = op.apply(sol.u);
  double res = 0.0;
  const double vol = g.cell_volume();
  for (std::size_t i = 0; i < t.size(); ++i) res += Ku[i] * t[i] - f[i] * vol * t[i];
  if (flux) {
    GridMeasure fm(op.grid);
    fm.set_flux(*flux);
    const NodalMeasure lf = load_vector(fm, g);
    for (std::size_t i = 0; i < t.size(); ++i) res -= lf[i] * t[i];
  }
  return res;
}

double max_nodal_share(const NodalMeasure& lambda) {
  const double mass = lambda.total_mass();
  if (mass <= 1e-10) return 0.0;  // massless reactions have no share
  double worst = 0.0;
  for (double l : lambda.masses) worst = std::max(worst, l);
  return worst / mass;
}

ReactionClassReport reaction_class_check(std::vector<ReactionClassRow> rows,
                                         bool mu_atom_free) {
  ReactionClassReport rep;
  rep.rows = std::move(rows);
  rep.share_decreasing = true;
  for (std::size_t i = 1; i < rep.rows.size(); ++i)
    if (rep.rows[i].share > rep.rows[i - 1].share + 1e-9) rep.share_decreasing = false;
  const double last = rep.rows.empty() ? 0.0 : rep.rows.back().share;
  const double first = rep.rows.empty() ? 0.0 : rep.rows.front().share;
  rep.atomic_flag = last >= 0.5 && last >= first - 1e-9;
  if (mu_atom_free) {
    rep.pass = rep.share_decreasing;
    rep.verdict = rep.pass ? "diffuse reaction" : "share not decreasing";
  } else {
    rep.pass = rep.atomic_flag;
    rep.verdict = rep.atomic_flag ? "atomic reaction" : "no atom detected";
  }
  return rep;
}

}  // namespace oplab
