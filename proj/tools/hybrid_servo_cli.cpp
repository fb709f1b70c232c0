// Command-line driver for the hybrid servoing solver.
#include <iostream>

#include <CLI11.hpp>

#include "hybrid_servo/runner.h"

int main(int argc, char** argv) {
  using hybrid_servo::run::RunConfig;
  CLI::App app{"Hybrid force-velocity servoing solver"};
  RunConfig config;
  std::uint64_t seed = 0;
  int starts = 0;
  double rank_tol = 0.0;
  double f_max = 0.0;
  bool single = false;

  app.add_option("--scenario", config.scenario_path, "Scenario JSON file")
      ->required()
      ->check(CLI::ExistingFile);
  app.add_option("--out", config.output_path,
                 "Output JSON path (stdout when omitted)");
  auto* seed_opt = app.add_option("--seed", seed, "RNG seed for the direction search");
  auto* starts_opt = app.add_option("--starts", starts, "Number of random starts")
                         ->check(CLI::PositiveNumber);
  auto* tol_opt = app.add_option("--rank-tol", rank_tol, "Relative SVD rank tolerance")
                      ->check(CLI::PositiveNumber);
  auto* fmax_opt = app.add_option("--f-max", f_max, "Force command bound [N]")
                       ->check(CLI::PositiveNumber);
  app.add_flag("--csv", config.emit_csv,
               "Also write per-step diagnostics next to --out as .csv");
  app.add_flag("--verify", config.verify, "Verify every step; exit 5 on failure");
  app.add_option("--export-instances", config.export_dir,
                 "Write every step as a raw-instance scenario into this directory");
  app.add_flag("--single", single, "Require a raw_instance scenario");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return hybrid_servo::run::kExitParse;
  }
  if (*seed_opt) config.rng_seed = seed;
  if (*starts_opt) config.num_starts = starts;
  if (*tol_opt) config.rank_tol = rank_tol;
  if (*fmax_opt) config.f_max = f_max;

  return single ? hybrid_servo::run::SolveSingle(config, std::cout, std::cerr)
                : hybrid_servo::run::RunTrajectory(config, std::cout, std::cerr);
}
