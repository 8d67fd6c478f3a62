// Command-line front end: solve / refine / experiment / capacity drivers.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "oplab/experiments.hpp"

namespace {

using namespace oplab;

struct CommonFlags {
  std::string out_dir;
  double tol = -1.0;
  std::string method;
  double omega = -1.0;
  double q = -1.0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_option("--tol", tol, "solver tolerance override");
    cmd->add_option("--method", method, "psor|activeset")
        ->check(CLI::IsMember({"psor", "activeset"}));
    cmd->add_option("--omega", omega, "PSOR relaxation override");
    cmd->add_option("--q", q, "norm exponent override");
  }

  void apply(Scenario& s) const {
    if (tol > 0.0) s.tol = tol;
    if (!method.empty()) s.method = method == "psor" ? ViMethod::psor : ViMethod::active_set;
    if (omega > 0.0) s.omega = omega;
    if (q > 0.0) s.q = q;
    if (!out_dir.empty()) s.out_dir = out_dir;
  }

  void apply(ExperimentOverrides& o) const {
    if (tol > 0.0) o.tol = tol;
    if (!method.empty()) o.method = method == "psor" ? ViMethod::psor : ViMethod::active_set;
    if (omega > 0.0) o.omega = omega;
    if (q > 0.0) o.q = q;
  }
};

std::string resolve_out_dir(const std::string& scenario_out, const std::string& flag_out) {
  if (!flag_out.empty()) return flag_out;
  if (!scenario_out.empty()) return scenario_out;
  if (const char* env = std::getenv("OPLAB_OUT")) return env;
  return ".";
}

void emit_atomically(const ConvergenceTable& table, EmitFormat format,
                     const std::string& path) {
  const std::string tmp = path + ".tmp";
  emit(table, format, tmp);
  std::filesystem::rename(tmp, path);
}

void emit_all(const ConvergenceTable& table, const std::string& dir,
              const std::string& stem) {
  std::filesystem::create_directories(dir);
  emit_atomically(table, EmitFormat::csv, dir + "/" + stem + ".csv");
  emit_atomically(table, EmitFormat::json_lines, dir + "/" + stem + ".jsonl");
  emit_atomically(table, EmitFormat::plot_data, dir + "/" + stem + ".dat");
}

void print_table_summary(const ConvergenceTable& t) {
  std::printf("%-6s %-10s %-12s %-12s %-10s %-8s\n", "level", "h", "mass_lambda",
              "u_max_abs", "contact", "iters");
  for (const auto& r : t.rows)
    std::printf("%-6d %-10.3g %-12.6g %-12.6g %-10lld %-8lld\n", r.level, r.h,
                r.mass_lambda, r.u_max_abs, static_cast<long long>(r.contact_nodes),
                static_cast<long long>(r.iters));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical laboratory for obstacle problems with measure data"};
  app.require_subcommand(1);

  std::string scenario_path, set_literal, experiment_name;
  int level_override = -1;
  std::vector<int> levels_override;
  int n_max = 3;

  CommonFlags flags;

  auto* solve_cmd = app.add_subcommand("solve", "solve one level of a scenario");
  solve_cmd->add_option("scenario", scenario_path, "scenario file")->required();
  solve_cmd->add_option("--level", level_override, "level (default: first listed)");
  flags.attach(solve_cmd);

  auto* refine_cmd = app.add_subcommand("refine", "run the scenario refinement study");
  refine_cmd->add_option("scenario", scenario_path, "scenario file")->required();
  flags.attach(refine_cmd);

  auto* exp_cmd = app.add_subcommand("experiment", "run a registry experiment");
  exp_cmd->add_option("name", experiment_name, "experiment name")->required();
  exp_cmd->add_option("--levels", levels_override, "levels override");
  exp_cmd->add_option("--n-max", n_max, "tile cap for weakstar_failure");
  flags.attach(exp_cmd);

  auto* cap_cmd = app.add_subcommand("capacity", "capacity of a grid set");
  cap_cmd->add_option("scenario", scenario_path, "scenario file (domain + coeff)")
      ->required();
  cap_cmd->add_option("--set", set_literal, "grid set literal")->required();
  cap_cmd->add_option("--level", level_override, "level (default: first listed)");
  flags.attach(cap_cmd);

  auto* list_cmd = app.add_subcommand("list-experiments", "list registry experiments");

  CLI11_PARSE(app, argc, argv);

  try {
    if (list_cmd->parsed()) {
      for (const auto& e : list_experiments())
        std::printf("%-24s %s\n", e.name.c_str(), e.description.c_str());
      return 0;
    }

    if (solve_cmd->parsed() || refine_cmd->parsed()) {
      Scenario scn = parse_scenario_file(scenario_path);
      flags.apply(scn);
      if (solve_cmd->parsed()) {
        const int lvl = level_override >= 0 ? level_override : scn.levels.front();
        scn.levels = {lvl};
      }
      const ConvergenceTable table = run_refinement(scn);
      print_table_summary(table);
      emit_all(table, resolve_out_dir(scn.out_dir, flags.out_dir), scn.name);
      bool ok = true;
      for (const auto& r : table.rows)
        for (const auto& [k, v] : r.extras)
          if (k == "bound_pass" && v != 1.0) ok = false;
      if (!ok) std::fprintf(stderr, "mass bound violated in at least one row\n");
      return ok ? 0 : 1;
    }

    if (exp_cmd->parsed()) {
      ExperimentOverrides o;
      flags.apply(o);
      if (!levels_override.empty()) o.levels = levels_override;
      if (exp_cmd->count("--n-max")) o.n_max = n_max;
      const ExperimentResult res = run_experiment(experiment_name, o);
      print_table_summary(res.table);
      for (const auto& line : res.checks) std::printf("%s\n", line.c_str());
      std::printf("verdict: %s\n", res.verdict.c_str());
      emit_all(res.table, resolve_out_dir("", flags.out_dir), experiment_name);
      return res.pass ? 0 : 1;
    }

    if (cap_cmd->parsed()) {
      Scenario scn = parse_scenario_file(scenario_path);
      flags.apply(scn);
      const int lvl = level_override >= 0 ? level_override : scn.levels.front();
      const GridPtr grid = scenario_grid(scn, lvl);
      const AssembledOperator op = assemble(grid, scenario_coeff(scn));
      const GridSet E = GridSet::parse(grid, set_literal);
      const double cap = capacity(op, E);
      const ViSolution pot = capacitary_potential(op, E);
      std::printf("level %d  h %.6g  |E| %zu  capacity %.12g  reaction mass %.12g\n",
                  lvl, grid->h, E.rows().size(), cap, pot.lambda.total_mass());
      return 0;
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
