#pragma once

// Discrete obstacle problems as linear complementarity systems:
//   u >= psi,  lambda := K u - b >= 0,  lambda . (u - psi) = 0,
// reaction extraction and the quantitative checks on solutions and reactions.

#include "oplab/elliptic.hpp"
#include "oplab/measure.hpp"

namespace oplab {

enum class ViMethod { psor, active_set };

struct ViConfig {
  ViMethod method = ViMethod::active_set;
  double omega = 1.5;                 // PSOR relaxation, in (0, 2)
  double tol = 1e-10;                 // on the projected residual, relative
  Index max_iter = 200000;            // PSOR sweeps
  Index max_active_set_iter = 200;
  double active_set_change_cap = 0.25;  // fraction of nodes flipped per sweep
  LinearSolveConfig linear;           // inner solves

  void validate() const {
    if (!(omega > 0.0 && omega < 2.0)) throw ArgumentError("omega must lie in (0, 2)");
    if (!(tol > 0.0 && tol < 1.0)) throw ArgumentError("tolerance must lie in (0, 1)");
    if (max_iter < 1) throw ArgumentError("max iterations must be >= 1");
  }
};

struct ViSolution {
  GridFunction u;
  NodalMeasure lambda;          // K u - b, computed exactly in fixed order
  ExtendedGridFunction psi;
  Index iterations = 0;
  double compl_residual = 0.0;  // sum lambda_i (u_i - psi_i) over finite psi
  double feas_residual = 0.0;   // max(0, psi - u)
  double proj_residual = 0.0;   // worst projected residual, relative to scale
  double scale = 1.0;           // max-norm of the load (residual normalizer)
  Index contact_count = 0;
  ViMethod method = ViMethod::active_set;

  double mass_lambda() const { return lambda.total_mass(); }
};

/// Solves the obstacle problem for load(mu) against psi. Warm start reuses a
/// previous solution's iterate/contact set.
ViSolution solve_vi(const AssembledOperator& op, const GridMeasure& mu,
                    const ExtendedGridFunction& psi, const ViConfig& cfg,
                    const ViSolution* warm = nullptr);
ViSolution solve_vi(const AssembledOperator& op, const NodalMeasure& b,
                    const ExtendedGridFunction& psi, const ViConfig& cfg,
                    const ViSolution* warm = nullptr);

/// Throws FeasibilityError unless u_rho >= psi nodewise (hypothesis check for
/// obstacles that are not nonpositive).
GridFunction check_dominating(const AssembledOperator& op, const NodalMeasure& rho_load,
                              const ExtendedGridFunction& psi, const LinearSolveConfig& cfg);

/// lambda = op u - load(mu).
NodalMeasure reaction(const AssembledOperator& op, const GridFunction& u,
                      const GridMeasure& mu);
NodalMeasure reaction(const AssembledOperator& op, const GridFunction& u,
                      const NodalMeasure& load_mu);

struct MassBoundReport {
  double mass_lambda = 0.0;
  double tv_bound = 0.0;   // TV of (load(mu) - load(rho))^-
  double slack = 0.0;      // tv_bound - mass_lambda
  bool pass = false;
};

/// mass(lambda) <= TV((mu - rho)^-), exact for monotone-valid operators with
/// psi <= 0 (rho = 0) and in the shifted general case.
MassBoundReport check_mass_bound(const ViSolution& sol, const GridMeasure& mu,
                                 const GridMeasure& rho);
MassBoundReport check_mass_bound(const ViSolution& sol, const NodalMeasure& load_mu,
                                 const NodalMeasure& load_rho);

struct MinimalityReport {
  int checked = 0;
  int skipped_infeasible = 0;
  double max_violation = 0.0;  // max over nodes of u - v
  bool pass = false;
};

/// For each sample nu >= 0 whose competitor v = u_mu + u_nu is feasible,
/// asserts u <= v + 1e-8 * scale nodewise.
MinimalityReport check_minimality(const ViSolution& sol, const AssembledOperator& op,
                                  const GridMeasure& mu, const ExtendedGridFunction& psi,
                                  const std::vector<GridMeasure>& samples,
                                  const LinearSolveConfig& cfg = {});

struct ComparisonReport {
  double max_lambda_violation = 0.0;  // max of lambda2 - lambda1
  double max_u_violation = 0.0;       // max of u1 - u2
  bool pass = false;
};

/// Ordered data: load(mu1) <= load(mu2) and psi <= 0 imply lambda1 >= lambda2
/// and u1 <= u2 componentwise.
ComparisonReport compare_reactions(const AssembledOperator& op, const GridMeasure& mu1,
                                   const GridMeasure& mu2, const ExtendedGridFunction& psi,
                                   const ViConfig& cfg);

struct TruncationTraceRow {
  double k = 0.0;
  double mass_lambda = 0.0;
  double tv_data = 0.0;       // TV of the regularized load at this k
  double w1q_gap = 0.0;       // |u_k - u_final|_{W^{1,q}}, filled afterwards
};

struct TruncationSolve {
  ViSolution final;
  std::vector<TruncationTraceRow> trace;
};

/// Runs the truncation scheme: for each k solve the VI with data
/// reg_k(mu - rho) + load(rho); the final iterate approximates the direct
/// solve when the last k dominates max|u_{mu-rho}|.
TruncationSolve solve_op_by_truncation(const AssembledOperator& op, const GridMeasure& mu,
                                       const ExtendedGridFunction& psi,
                                       const GridMeasure& rho,
                                       const std::vector<double>& schedule,
                                       const ViConfig& cfg, double trace_q = 1.1);

/// <op u, T_j(v-u)> - sum f T_j(v-u) h^N - <load(F), T_j(v-u)>; nonnegative
/// up to solver error for feasible bounded v and atom-free data f + F.
double entropy_residual(const AssembledOperator& op, const ViSolution& sol,
                        const GridFunction& f, const EdgeFluxField* flux,
                        const GridFunction& v, double j);

/// Largest single-node share of the reaction mass (0 when massless).
double max_nodal_share(const NodalMeasure& lambda);

struct ReactionClassRow {
  int level = 0;
  double share = 0.0;
  double mass = 0.0;
};

struct ReactionClassReport {
  std::vector<ReactionClassRow> rows;
  bool share_decreasing = false;
  bool atomic_flag = false;   // share -> 1
  std::string verdict;
  bool pass = false;          // for atom-free data: share decreasing
};

ReactionClassReport reaction_class_check(std::vector<ReactionClassRow> rows,
                                         bool mu_atom_free);

}  // namespace oplab
