#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "hybrid_servo/errors.h"
#include "hybrid_servo/instance_io.h"

namespace hybrid_servo::run {

enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitInfeasible = 2,
  kExitInfeasibleLP = 3,
  kExitParse = 4,
  kExitVerification = 5,
};

/// Command-line settings. Unset solver fields fall back to the scenario
/// file's `solver` section, then to the library defaults.
struct RunConfig {
  std::string scenario_path;
  std::string output_path;
  std::optional<int> num_starts;
  std::optional<std::uint64_t> rng_seed;
  std::optional<double> rank_tol;
  std::optional<double> f_max;
  bool emit_csv = false;
  bool verify = false;
  /// When nonempty, every step is also written as a raw instance here.
  std::string export_dir;
};

struct StepRecord {
  int step = 0;
  StepSolution solution;
  SystemInstance instance;
  GuardConditions guard;
  std::optional<verify::VerificationReport> report;
  double newton_residual = 0.0;
  /// Block tilting only.
  std::optional<tilting::TiltingState> state;
};

struct RunResult {
  int exit_code = kExitOk;
  int failing_step = -1;
  std::string error;
  SolverConfig config;
  std::vector<StepRecord> steps;
};

int ExitCodeFor(ErrorCode code);

/// Applies the command-line overrides on top of the scenario's settings.
SolverConfig ResolveConfig(const io::ScenarioFile& scenario, const RunConfig& config);

/// Solves every step of the scenario in memory (one step for raw instances).
/// Stops at the first failing step.
RunResult RunScenario(const io::ScenarioFile& scenario, const RunConfig& config);

/// Output document for a run: per-step actions, diagnostics and reports.
/// Contains no timing so that equal inputs give equal bytes.
io::Json ResultToJson(const io::ScenarioFile& scenario, const RunResult& result);

/// Per-step CSV with a final median row.
std::string ResultToCsv(const RunResult& result);

/// Full file-level driver: reads the scenario, writes the outputs, and
/// reports failures on `err`. Returns the process exit code.
int RunTrajectory(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Solves a single raw instance file.
int SolveSingle(const RunConfig& config, std::ostream& out, std::ostream& err);

}  // namespace hybrid_servo::run
