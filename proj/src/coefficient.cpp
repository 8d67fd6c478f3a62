#include "oplab/coefficient.hpp"

#include <cmath>
#include <sstream>

namespace oplab {

CoefficientField CoefficientField::identity() {
  CoefficientField f;
  f.gamma_ = 1.0;
  f.symmetric_ = true;
  f.cross_ = false;
  return f;
}

CoefficientField CoefficientField::diagonal(std::array<ScalarField, 3> a, double gamma) {
  if (gamma <= 0.0) throw EllipticityError("ellipticity constant gamma must be > 0");
  CoefficientField f;
  for (int d = 0; d < 3; ++d) f.a_[d][d] = std::move(a[d]);
  f.gamma_ = gamma;
  f.symmetric_ = true;
  f.cross_ = false;
  return f;
}

CoefficientField CoefficientField::full(std::array<std::array<ScalarField, 3>, 3> a,
                                        double gamma, bool symmetric) {
  if (gamma <= 0.0) throw EllipticityError("ellipticity constant gamma must be > 0");
  CoefficientField f;
  f.a_ = std::move(a);
  f.gamma_ = gamma;
  f.symmetric_ = symmetric;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (i != j && f.a_[i][j]) f.cross_ = true;
  return f;
}

double CoefficientField::entry(int i, int j, const std::array<double, 3>& x) const {
  if (!a_[i][j]) return i == j ? 1.0 : 0.0;
  return a_[i][j](x);
}

void CoefficientField::check_ellipticity_at(const std::array<double, 3>& x, int dim) const {
  // xi runs over e_d and e_d +- e_e.
  std::array<std::array<double, 3>, 3> A{};
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) {
      A[i][j] = entry(i, j, x);
      if (!std::isfinite(A[i][j])) {
        std::ostringstream os;
        os << "coefficient a_" << i + 1 << j + 1 << " not finite at sample ("
           << x[0] << ", " << x[1] << ", " << x[2] << ")";
        throw EllipticityError(os.str());
      }
    }
  auto quad = [&](const std::array<double, 3>& xi) {
    double q = 0.0, n2 = 0.0;
    for (int i = 0; i < dim; ++i) {
      n2 += xi[i] * xi[i];
      for (int j = 0; j < dim; ++j) q += A[i][j] * xi[i] * xi[j];
    }
    return q - gamma_ * n2;
  };
  for (int d = 0; d < dim; ++d) {
    std::array<double, 3> xi{0, 0, 0};
    xi[d] = 1.0;
    if (quad(xi) < -1e-12) throw EllipticityError("declared gamma violated at a sample");
    for (int e = d + 1; e < dim; ++e)
      for (double s : {1.0, -1.0}) {
        std::array<double, 3> d2{0, 0, 0};
        d2[d] = 1.0;
        d2[e] = s;
        if (quad(d2) < -1e-12)
          throw EllipticityError("declared gamma violated at a diagonal sample");
      }
  }
}

}  // namespace oplab
