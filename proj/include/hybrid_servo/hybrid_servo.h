#pragma once

#include "hybrid_servo/force_solver.h"
#include "hybrid_servo/system_model.h"
#include "hybrid_servo/velocity_solver.h"

namespace hybrid_servo {

struct SolverConfig {
  VelocitySolverConfig velocity;
  ForceSolverConfig force;
};

struct StepSolution {
  VelocitySolution velocity;
  ForceSolution force;
  HybridAction action;
  double ms_velocity = 0.0;
  double ms_force = 0.0;
};

/// Velocity stage followed by the force stage for one time step.
StepSolution SolveStep(const SystemInstance& instance,
                       const GuardConditions& guard,
                       const SolverConfig& config);

HybridAction MakeAction(const VelocitySolution& velocity,
                        const ForceSolution& force);

}  // namespace hybrid_servo
