#pragma once

// Monotone conservative assembly of -div(A(x) grad u) in measure form:
// the matrix maps nodal values to nodal masses (stiffness scaled by h^(N-2)),
// so measure data enter as plain nodal masses.

#include <iosfwd>
#include <optional>

#include "oplab/coefficient.hpp"
#include "oplab/grid.hpp"

namespace oplab {

/// Sparse row-compressed operator over interior nodes.
class AssembledOperator {
 public:
  GridPtr grid;
  Index n = 0;
  std::vector<Index> row_ptr;   // size n+1
  std::vector<Index> col;       // sorted within each row
  std::vector<double> val;
  bool symmetric = false;       // coefficient symmetry flag
  // Sum of the weights that eliminated (boundary/exterior) neighbors would
  // carry in each row; full-stencil conservation says row_sum + eliminated = 0.
  std::vector<double> row_eliminated;

  void apply(const std::vector<double>& x, std::vector<double>& y) const;
  std::vector<double> apply(const std::vector<double>& x) const;
  NodalMeasure apply(const GridFunction& u) const;

  double diag(Index i) const;
  double max_diag() const;
  std::vector<double> row_sums() const;
  std::vector<double> col_sums() const;
  double coeff(Index i, Index j) const;  // 0 when absent

  bool same_pattern_and_values(const AssembledOperator& other) const;
};

struct AssembleOptions {
  // Cross-term coefficient configurations generally produce positive corner
  // weights; the default refuses them so the obstacle theory never runs on a
  // non-monotone matrix by accident.
  bool allow_nonmonotone = false;
};

AssembledOperator assemble(const GridPtr& grid, const CoefficientField& coeff,
                           const AssembleOptions& opts = {});

/// Matrix transpose. Involutive bit-for-bit; equals the input entrywise for
/// symmetric operators.
AssembledOperator adjoint(const AssembledOperator& op);

struct MonotoneReport {
  bool passed = false;
  double worst_positive_offdiag = 0.0;
  Index offdiag_row = -1, offdiag_col = -1;
  double worst_negative_colsum = 0.0;
  Index colsum_col = -1;
  int diag_sign_violations = 0;
  double tolerance = 0.0;  // 1e-12 * diagonal scale
};

MonotoneReport validate_monotone(const AssembledOperator& op);

void write_operator_text(const AssembledOperator& op, std::ostream& os);

}  // namespace oplab
