#pragma once

// Refinement driver and the experiment registry: each entry runs a scripted
// refinement study and checks at least one machine-verifiable inequality.

#include <optional>

#include "oplab/scenario.hpp"
#include "oplab/table.hpp"

namespace oplab {

/// One level of a scenario, fully realized and solved.
struct LevelRun {
  GridPtr grid;
  ViSolution sol;
  NodalMeasure load_mu;
  NodalMeasure load_rho;
  TableRow row;
};

/// Per level: build, assemble, solve, check the mass bound and minimality,
/// record. Deterministic for a fixed scenario; coarse solutions seed finer
/// levels.
ConvergenceTable run_refinement(const Scenario& scn,
                                std::vector<LevelRun>* runs_out = nullptr);

struct ExperimentOverrides {
  std::optional<std::vector<int>> levels;
  std::optional<ViMethod> method;
  std::optional<double> tol;
  std::optional<double> omega;
  std::optional<double> q;
  std::optional<int> n_max;  // weak-* tile cap
};

struct ExperimentResult {
  ConvergenceTable table;
  std::vector<std::string> checks;  // "PASS: ..." / "FAIL: ..." lines
  bool pass = false;
  std::string verdict;
};

struct ExperimentInfo {
  std::string name;
  std::string description;
};

std::vector<ExperimentInfo> list_experiments();
ExperimentResult run_experiment(const std::string& name,
                                const ExperimentOverrides& overrides = {});

/// Built-in scenario behind a registry entry (also shipped under scenarios/).
Scenario builtin_scenario(const std::string& name);

}  // namespace oplab
