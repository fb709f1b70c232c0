#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "hybrid_servo/block_tilting.h"
#include "hybrid_servo/hybrid_servo.h"
#include "hybrid_servo/verifier.h"

namespace hybrid_servo::io {

using Json = nlohmann::ordered_json;

constexpr int kSchemaVersion = 1;

/// Solver settings that a scenario file may override.
struct SolverOverrides {
  std::optional<int> num_starts;
  std::optional<std::uint64_t> rng_seed;
  std::optional<double> rank_tol;
  std::optional<double> f_max;
  std::optional<double> step_length;
  std::optional<int> max_iters;
  std::optional<bool> lexicographic;

  void ApplyTo(SolverConfig& config) const;
};

enum class ScenarioType { kBlockTilting, kRawInstance };

/// In-memory form of a scenario file.
struct ScenarioFile {
  ScenarioType type = ScenarioType::kBlockTilting;
  tilting::TiltingScenario tilting;
  SystemInstance instance;
  GuardConditions guard;
  SolverOverrides solver;
};

/// Parse errors throw SolverError(kParse); bad values kInvalidArgument.
ScenarioFile ParseScenario(const std::string& text);
ScenarioFile LoadScenario(const std::string& path);

Json ScenarioToJson(const ScenarioFile& scenario);
/// Canonical text: two-space indentation and a trailing newline.
std::string Dump(const Json& json);

Json MatrixToJson(const Matrix& m);
Json VectorToJson(const Vector& v);
/// `cols` gives the column count of a zero-row matrix.
Matrix MatrixFromJson(const Json& j, Eigen::Index cols, const std::string& what);
Vector VectorFromJson(const Json& j, const std::string& what);

Json ActionToJson(const HybridAction& action);
Json ReportToJson(const verify::VerificationReport& report);

/// Raw-instance scenario reproducing a single step.
ScenarioFile RawScenario(const SystemInstance& instance,
                         const GuardConditions& guard,
                         const SolverConfig& config);

}  // namespace hybrid_servo::io
