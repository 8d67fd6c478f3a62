#pragma once

// Scenario files: a flat line-oriented text format describing one obstacle
// problem family (domain, coefficients, data, obstacle, dominating measure,
// solver settings, refinement levels).

#include <optional>
#include <string>

#include "oplab/capacity.hpp"
#include "oplab/expression.hpp"

namespace oplab {

struct MeasureSpec {
  std::vector<std::array<double, 4>> atoms;  // x y z weight
  std::optional<std::string> density_expr;   // whitespace-free expression
  std::vector<std::string> flux_exprs;       // one per axis
  bool vi_reaction = false;  // rho only: the reaction of VI(0, psi)

  bool trivially_zero() const {
    return atoms.empty() && !density_expr && flux_exprs.empty() && !vi_reaction;
  }
};

struct ObstacleSpec {
  enum class Kind { constant, expr, green_pole, log_obstacle_1d, none };
  Kind kind = Kind::none;
  double value = 0.0;                 // constant
  std::string expr;                   // expr
  std::array<double, 3> pole{0, 0, 0};

  /// True when the obstacle is certainly <= 0 without evaluating on a grid.
  bool certainly_nonpositive() const {
    return kind == Kind::none || (kind == Kind::constant && value <= 0.0);
  }
};

struct MaskSpec {
  enum class Kind { none, minus_ball, inside_ball } kind = Kind::none;
  std::array<double, 3> center{0, 0, 0};
  double radius = 0.0;
};

struct CoeffSpec {
  enum class Kind { identity, diagonal, full } kind = Kind::identity;
  std::vector<std::string> exprs;  // diag: N entries; full: N*N row-major
  double gamma = 1.0;
};

struct Scenario {
  std::string name = "scenario";
  int dim = 2;
  std::array<double, 3> lo{0, 0, 0};
  std::array<double, 3> hi{1, 1, 1};
  MaskSpec mask;
  double alpha = 0.25;
  std::vector<int> levels{3};
  CoeffSpec coeff;
  MeasureSpec mu;
  ObstacleSpec psi;
  std::optional<MeasureSpec> rho;
  ViMethod method = ViMethod::active_set;
  double tol = 1e-10;
  double omega = 1.5;
  Index max_iter = 200000;
  double q = 1.1;
  std::string out_dir;
  std::string experiment;  // optional registry name

  bool operator==(const Scenario& other) const;

  ViConfig vi_config() const {
    ViConfig cfg;
    cfg.method = method;
    cfg.omega = omega;
    cfg.tol = tol;
    cfg.max_iter = max_iter;
    return cfg;
  }
};

Scenario parse_scenario(const std::string& text);
Scenario parse_scenario_file(const std::string& path);
std::string serialize_scenario(const Scenario& s);

/// FNV-1a over the canonical serialization, hex string.
std::string scenario_hash(const Scenario& s);

// Per-level realizations.
GridPtr scenario_grid(const Scenario& s, int level);
CoefficientField scenario_coeff(const Scenario& s);
GridMeasure scenario_measure(const MeasureSpec& m, const GridPtr& grid);
ExtendedGridFunction scenario_obstacle(const Scenario& s, const GridPtr& grid,
                                       const AssembledOperator& op);
/// Builds the dominating load; vi-reaction solves VI(0, psi) first.
NodalMeasure scenario_rho_load(const Scenario& s, const GridPtr& grid,
                               const AssembledOperator& op,
                               const ExtendedGridFunction& psi);

}  // namespace oplab
