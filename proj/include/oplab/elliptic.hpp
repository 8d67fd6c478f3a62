#pragma once

// Linear solves in measure form, the duality identity, discrete Sobolev norms.

#include "oplab/assemble.hpp"
#include "oplab/measure.hpp"

namespace oplab {

struct LinearSolveConfig {
  double rel_tol = 1e-10;     // on the max-norm residual
  Index max_iter = 50000;
  enum class Method { automatic, cg, bicgstab, dense } method = Method::automatic;

  void validate() const {
    if (!(rel_tol > 0.0 && rel_tol < 1.0))
      throw ArgumentError("solver tolerance must lie in (0, 1)");
    if (max_iter < 1) throw ArgumentError("max iterations must be >= 1");
  }
};

struct SolveStats {
  Index iterations = 0;
  double residual = 0.0;      // relative max-norm
};

/// Solves op u = b. Grids with at most 400 unknowns take the dense direct
/// path; larger symmetric systems use Jacobi-preconditioned CG, nonsymmetric
/// ones BiCGStab. Deterministic fixed-order reductions throughout.
GridFunction solve_linear(const AssembledOperator& op, const NodalMeasure& b,
                          const LinearSolveConfig& cfg, SolveStats* stats = nullptr,
                          const GridFunction* warm_start = nullptr);

/// |sum u_mu g h^N - sum u*_g dmu| with adjoint(op) u*_g = load of density g.
double duality_check(const AssembledOperator& op, const NodalMeasure& mu,
                     const GridFunction& g, const LinearSolveConfig& cfg = {});

struct SobolevNorms {
  double lq = 0.0;
  double w1q = 0.0;
  bool q_outside_paper_range = false;  // q not in (1, N/(N-1))
};

/// Lq = (sum |u|^q h^N)^(1/q); W1q from forward differences on all lattice
/// edges with an interior endpoint, eliminated endpoints contributing 0.
SobolevNorms sobolev_norms(const GridFunction& u, const DomainGrid& grid, double q);

/// Dense LU with partial pivoting (the small-system direct path).
std::vector<double> dense_solve(std::vector<double> a, std::vector<double> b);

}  // namespace oplab
