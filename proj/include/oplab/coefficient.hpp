#pragma once

// Coefficient matrices A(x) = ((a_ij)) with a declared ellipticity constant.

#include <array>
#include <functional>

#include "oplab/types.hpp"

namespace oplab {

using ScalarField = std::function<double(const std::array<double, 3>&)>;

class CoefficientField {
 public:
  /// A = I.
  static CoefficientField identity();
  /// Diagonal anisotropic field; gamma defaults to 1 and must be adjusted by
  /// the caller when the entries dip below it.
  static CoefficientField diagonal(std::array<ScalarField, 3> a, double gamma);
  /// Full matrix field (row-major a[i][j]); symmetric must be declared.
  static CoefficientField full(std::array<std::array<ScalarField, 3>, 3> a,
                               double gamma, bool symmetric);

  double entry(int i, int j, const std::array<double, 3>& x) const;
  double gamma() const { return gamma_; }
  bool declared_symmetric() const { return symmetric_; }
  bool has_cross_terms() const { return cross_; }

  /// Checks finiteness and xi^T A xi >= gamma |xi|^2 at x for the coordinate
  /// directions and their diagonals. Throws EllipticityError.
  void check_ellipticity_at(const std::array<double, 3>& x, int dim) const;

 private:
  CoefficientField() = default;
  std::array<std::array<ScalarField, 3>, 3> a_{};
  double gamma_ = 1.0;
  bool symmetric_ = true;
  bool cross_ = false;
};

}  // namespace oplab
