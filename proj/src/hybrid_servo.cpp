#include "hybrid_servo/hybrid_servo.h"

#include <chrono>

#include "hybrid_servo/errors.h"

namespace hybrid_servo {

namespace {

double MillisecondsSince(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - start)
      .count();
}

}  // namespace

HybridAction MakeAction(const VelocitySolution& velocity,
                        const ForceSolution& force) {
  HybridAction action;
  action.n_av = velocity.n_av;
  action.n_af = static_cast<int>(velocity.R_a.rows()) - velocity.n_av;
  action.T = velocity.T;
  action.R_a = velocity.R_a;
  action.w_av = velocity.b_C;
  action.eta_af = force.eta_af;
  action.lambda = force.lambda;
  action.eta = force.eta;
  return action;
}

StepSolution SolveStep(const SystemInstance& instance,
                       const GuardConditions& guard,
                       const SolverConfig& config) {
  const auto issues = Validate(instance, guard);
  if (!issues.empty()) {
    const ErrorCode code =
        issues.front().kind == ValidationIssue::Kind::kNonFinite
            ? ErrorCode::kNonFinite
            : ErrorCode::kDimensionMismatch;
    throw SolverError(code, issues.front().message);
  }
  StepSolution out;
  auto t0 = std::chrono::steady_clock::now();
  out.velocity = SolveVelocity(instance, config.velocity);
  out.ms_velocity = MillisecondsSince(t0);

  t0 = std::chrono::steady_clock::now();
  out.force = SolveForce(instance, guard, out.velocity.T, out.velocity.n_av,
                         config.force);
  out.ms_force = MillisecondsSince(t0);
  out.action = MakeAction(out.velocity, out.force);
  return out;
}

}  // namespace hybrid_servo
