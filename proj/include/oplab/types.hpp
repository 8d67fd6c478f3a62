#pragma once

// Basic value types and error hierarchy shared by all modules.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace oplab {

using Index = std::int64_t;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Errors

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ArgumentError : public Error { using Error::Error; };
class EmptyDomainError : public Error { using Error::Error; };
class RegularityError : public Error { using Error::Error; };
class EllipticityError : public Error { using Error::Error; };
class MonotonicityError : public Error { using Error::Error; };
class PlacementError : public Error { using Error::Error; };
class SolverError : public Error {
 public:
  SolverError(const std::string& msg, double residual)
      : Error(msg), final_residual(residual) {}
  double final_residual = 0.0;
};
class FeasibilityError : public Error { using Error::Error; };
class ResolutionError : public Error {
 public:
  ResolutionError(const std::string& msg, int level_needed)
      : Error(msg), required_level(level_needed) {}
  int required_level = 0;
};
class SymmetryError : public Error { using Error::Error; };
class ParseError : public Error {
 public:
  ParseError(const std::string& msg, int line_no = 0)
      : Error(line_no > 0 ? "line " + std::to_string(line_no) + ": " + msg : msg),
        line(line_no) {}
  int line = 0;
};
class RegistryError : public Error { using Error::Error; };
class IoError : public Error { using Error::Error; };

// ---------------------------------------------------------------------------
// Nodal value types. All three are plain vectors indexed by interior-node row;
// the distinct types keep loads (masses) from being mixed up with point values.

/// Real values on interior nodes, all finite.
struct GridFunction {
  std::vector<double> values;

  GridFunction() = default;
  explicit GridFunction(std::size_t n, double fill = 0.0) : values(n, fill) {}
  explicit GridFunction(std::vector<double> v) : values(std::move(v)) {}

  std::size_t size() const { return values.size(); }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }

  double max_abs() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
  }
};

/// Nodal values extended with -inf (unconstrained nodes of an obstacle).
/// +inf is rejected at construction.
struct ExtendedGridFunction {
  std::vector<double> values;

  ExtendedGridFunction() = default;
  explicit ExtendedGridFunction(std::size_t n, double fill = kNegInf)
      : values(n, fill) {
    check();
  }
  explicit ExtendedGridFunction(std::vector<double> v) : values(std::move(v)) {
    check();
  }

  std::size_t size() const { return values.size(); }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }

  bool all_nonpositive() const {
    for (double v : values)
      if (v > 0.0) return false;
    return true;
  }

 private:
  void check() const {
    for (double v : values)
      if (v == std::numeric_limits<double>::infinity() || std::isnan(v))
        throw ArgumentError("obstacle values must be finite or -inf");
  }
};

/// One mass per interior node; the native form of loads and reactions.
struct NodalMeasure {
  std::vector<double> masses;

  NodalMeasure() = default;
  explicit NodalMeasure(std::size_t n, double fill = 0.0) : masses(n, fill) {}
  explicit NodalMeasure(std::vector<double> m) : masses(std::move(m)) {}

  std::size_t size() const { return masses.size(); }
  double& operator[](std::size_t i) { return masses[i]; }
  double operator[](std::size_t i) const { return masses[i]; }

  double total_variation() const {
    double s = 0.0;
    for (double m : masses) s += std::abs(m);
    return s;
  }
  double total_mass() const {
    double s = 0.0;
    for (double m : masses) s += m;
    return s;
  }
  double max_abs() const {
    double m = 0.0;
    for (double v : masses) m = std::max(m, std::abs(v));
    return m;
  }
};

}  // namespace oplab
