#include "hybrid_servo/runner.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "hybrid_servo/errors.h"
#include "hybrid_servo/verifier.h"

namespace hybrid_servo::run {

namespace {

double Median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

StepRecord SolveOne(int step, const SystemInstance& instance,
                    const GuardConditions& guard, const SolverConfig& config,
                    bool with_report) {
  StepRecord rec;
  rec.step = step;
  rec.instance = instance;
  rec.guard = guard;
  rec.solution = SolveStep(instance, guard, config);
  const auto force_check = verify::CheckForceSolution(
      instance, guard, rec.solution.action.T, rec.solution.force);
  rec.newton_residual = force_check.newton_residual;
  if (with_report) {
    verify::VerificationReport report;
    report.velocity = verify::CheckVelocitySolution(
        instance, rec.solution.velocity, config.velocity.rank_tol);
    report.force = force_check;
    rec.report = report;
  }
  return rec;
}

std::string CsvPathFor(const std::string& output_path) {
  std::filesystem::path p(output_path);
  p.replace_extension(".csv");
  return p.string();
}

bool WriteFile(const std::string& path, const std::string& text, std::ostream& err) {
  std::ofstream f(path, std::ios::binary);
  if (!f) {
    err << "error: cannot write " << path << "\n";
    return false;
  }
  f << text;
  return static_cast<bool>(f);
}

}  // namespace

int ExitCodeFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInfeasibleDimensions:
    case ErrorCode::kInconsistentGoal:
    case ErrorCode::kEmptyBasis:
      return kExitInfeasible;
    case ErrorCode::kInfeasibleLP:
      return kExitInfeasibleLP;
    case ErrorCode::kParse:
    case ErrorCode::kNonFinite:
    case ErrorCode::kDimensionMismatch:
    case ErrorCode::kInvalidArgument:
      return kExitParse;
    default:
      return kExitInternal;
  }
}

SolverConfig ResolveConfig(const io::ScenarioFile& scenario, const RunConfig& config) {
  SolverConfig out;
  scenario.solver.ApplyTo(out);
  io::SolverOverrides cli;
  cli.num_starts = config.num_starts;
  cli.rng_seed = config.rng_seed;
  cli.rank_tol = config.rank_tol;
  cli.f_max = config.f_max;
  cli.ApplyTo(out);
  if (out.velocity.num_starts < 1 || !(out.velocity.rank_tol > 0.0) ||
      !(out.force.f_max > 0.0)) {
    throw SolverError(ErrorCode::kInvalidArgument,
                      "starts, rank tolerance and f_max must be positive");
  }
  return out;
}

RunResult RunScenario(const io::ScenarioFile& scenario, const RunConfig& config) {
  RunResult result;
  int step = 0;
  try {
    result.config = ResolveConfig(scenario, config);
    if (scenario.type == io::ScenarioType::kRawInstance) {
      result.steps.push_back(SolveOne(0, scenario.instance, scenario.guard,
                                      result.config, config.verify));
    } else {
      tilting::ValidateScenario(scenario.tilting);
      const auto states = tilting::PlannedTrajectory(scenario.tilting);
      for (step = 0; step < static_cast<int>(states.size()); ++step) {
        const auto [instance, guard] = tilting::BuildInstance(states[step], scenario.tilting);
        StepRecord rec = SolveOne(step, instance, guard, result.config, config.verify);
        rec.state = states[step];
        result.steps.push_back(std::move(rec));
      }
    }
  } catch (const SolverError& e) {
    result.exit_code = ExitCodeFor(e.code());
    result.failing_step = step;
    result.error = e.what();
    return result;
  } catch (const std::exception& e) {
    result.exit_code = kExitInternal;
    result.failing_step = step;
    result.error = e.what();
    return result;
  }
  if (config.verify) {
    for (const auto& rec : result.steps) {
      if (rec.report && !rec.report->pass()) {
        result.exit_code = kExitVerification;
        result.failing_step = rec.step;
        result.error = "verification failed";
        break;
      }
    }
  }
  return result;
}

io::Json ResultToJson(const io::ScenarioFile& scenario, const RunResult& result) {
  io::Json j;
  j["schema"] = io::kSchemaVersion;
  j["scenario_type"] = scenario.type == io::ScenarioType::kBlockTilting
                           ? "block_tilting" : "raw_instance";
  const auto& c = result.config;
  j["solver"] = {{"num_starts", c.velocity.num_starts},
                 {"rng_seed", c.velocity.rng_seed},
                 {"rank_tol", c.velocity.rank_tol},
                 {"f_max", c.force.f_max}};
  io::Json steps = io::Json::array();
  for (const auto& rec : result.steps) {
    const auto& sol = rec.solution;
    io::Json s;
    s["step"] = rec.step;
    s["n_av"] = sol.velocity.n_av;
    s["pgd_cost"] = sol.velocity.cost;
    s["lp_margin"] = sol.force.objective_margin;
    s["newton_residual"] = rec.newton_residual;
    s["C"] = io::MatrixToJson(sol.velocity.C);
    s["action"] = io::ActionToJson(sol.action);
    if (rec.state) {
      const int n = rec.instance.n();
      const Vector f = sol.action.T.fullPivLu().solve(sol.action.eta);
      io::Json t;
      t["angle"] = rec.state->angle;
      // Actuated force/velocity blocks are the hand's world-frame components.
      t["hand_force_world"] = io::VectorToJson(f.tail(3));
      t["velocity_direction_hand"] = sol.velocity.n_av > 0
          ? io::VectorToJson(sol.velocity.C.row(0).tail(3).transpose())
          : io::Json::array();
      t["hand_position"] = io::VectorToJson(rec.state->hand);
      t["n"] = n;
      s["tilting"] = std::move(t);
    }
    if (rec.report) s["verification"] = io::ReportToJson(*rec.report);
    steps.push_back(std::move(s));
  }
  j["steps"] = std::move(steps);
  j["status"] = {{"exit_code", result.exit_code},
                 {"failing_step", result.failing_step},
                 {"error", result.error}};
  return j;
}

std::string ResultToCsv(const RunResult& result) {
  std::ostringstream out;
  out << std::setprecision(10);
  out << "step,n_av,pgd_cost,lp_margin,newton_residual,ms_velocity,ms_force\n";
  std::vector<double> cost, margin, residual, msv, msf, nav;
  for (const auto& rec : result.steps) {
    const auto& sol = rec.solution;
    out << rec.step << ',' << sol.velocity.n_av << ',' << sol.velocity.cost << ','
        << sol.force.objective_margin << ',' << rec.newton_residual << ','
        << sol.ms_velocity << ',' << sol.ms_force << '\n';
    nav.push_back(sol.velocity.n_av);
    cost.push_back(sol.velocity.cost);
    margin.push_back(sol.force.objective_margin);
    residual.push_back(rec.newton_residual);
    msv.push_back(sol.ms_velocity);
    msf.push_back(sol.ms_force);
  }
  out << "median," << Median(nav) << ',' << Median(cost) << ',' << Median(margin) << ','
      << Median(residual) << ',' << Median(msv) << ',' << Median(msf) << '\n';
  return out.str();
}

namespace {

int Drive(const RunConfig& config, std::ostream& out, std::ostream& err,
          std::optional<io::ScenarioType> required) {
  io::ScenarioFile scenario;
  try {
    scenario = io::LoadScenario(config.scenario_path);
    if (required && scenario.type != *required) {
      throw SolverError(ErrorCode::kParse, "expected a raw_instance scenario");
    }
  } catch (const SolverError& e) {
    err << "error: " << config.scenario_path << ": " << e.what() << "\n";
    return ExitCodeFor(e.code());
  }
  if (config.emit_csv && config.output_path.empty()) {
    err << "error: --csv requires --out\n";
    return kExitParse;
  }

  const RunResult result = RunScenario(scenario, config);
  if (result.exit_code != kExitOk) {
    err << "error: step " << result.failing_step << ": " << result.error << "\n";
  }

  const std::string text = io::Dump(ResultToJson(scenario, result));
  if (config.output_path.empty()) {
    out << text;
  } else if (!WriteFile(config.output_path, text, err)) {
    return kExitInternal;
  }
  if (config.emit_csv &&
      !WriteFile(CsvPathFor(config.output_path), ResultToCsv(result), err)) {
    return kExitInternal;
  }
  if (!config.export_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(config.export_dir, ec);
    for (const auto& rec : result.steps) {
      std::ostringstream name;
      name << "step_" << std::setw(2) << std::setfill('0') << rec.step << ".json";
      const auto path = std::filesystem::path(config.export_dir) / name.str();
      const auto raw = io::RawScenario(rec.instance, rec.guard, result.config);
      if (!WriteFile(path.string(), io::Dump(io::ScenarioToJson(raw)), err)) {
        return kExitInternal;
      }
    }
  }
  return result.exit_code;
}

}  // namespace

int RunTrajectory(const RunConfig& config, std::ostream& out, std::ostream& err) {
  return Drive(config, out, err, std::nullopt);
}

int SolveSingle(const RunConfig& config, std::ostream& out, std::ostream& err) {
  return Drive(config, out, err, io::ScenarioType::kRawInstance);
}

}  // namespace hybrid_servo::run
