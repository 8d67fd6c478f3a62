#pragma once

// Convergence tables and their csv / json-lines / plot-data emission.

#include <map>
#include <string>

#include "oplab/types.hpp"

namespace oplab {

struct TableRow {
  int level = 0;
  double h = 0.0;
  std::string method;
  Index iters = 0;
  double residual = 0.0;
  double mass_lambda = 0.0;
  double tv_mu = 0.0;
  double tv_mu_plus = 0.0;
  double tv_mu_minus = 0.0;
  double bound_slack = 0.0;
  double u_max_abs = 0.0;
  double lq_norm = 0.0;
  double w1q_seminorm = 0.0;
  Index contact_nodes = 0;
  double compl_residual = 0.0;
  std::vector<std::pair<std::string, double>> extras;
};

struct ConvergenceTable {
  std::string scenario_hash;
  std::vector<TableRow> rows;
  double wall_time_seconds = 0.0;  // in-memory metadata; never emitted

  /// Union of extra keys in first-appearance order.
  std::vector<std::string> extra_keys() const;
};

enum class EmitFormat { csv, json_lines, plot_data };

void emit(const ConvergenceTable& table, EmitFormat format, const std::string& path);
std::string emit_to_string(const ConvergenceTable& table, EmitFormat format);

/// Reads back a json-lines emission (fixture for round-trip checks).
ConvergenceTable read_json_lines(const std::string& text);

}  // namespace oplab
