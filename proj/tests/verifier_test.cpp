#include "hybrid_servo/verifier.h"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "hybrid_servo/block_tilting.h"
#include "hybrid_servo/errors.h"
#include "hybrid_servo/hybrid_servo.h"
#include "test_support.h"

namespace hybrid_servo::verify {
namespace {

class TiltingStep : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto built = tilting::BuildInstance(tilting::InitialState(scenario_), scenario_);
    inst_ = built.first;
    guard_ = built.second;
    step_ = SolveStep(inst_, guard_, {});
  }
  tilting::TiltingScenario scenario_;
  SystemInstance inst_;
  GuardConditions guard_;
  StepSolution step_;
};

TEST_F(TiltingStep, SolverOutputPasses) {
  const VelocityCheck v = CheckVelocitySolution(inst_, step_.velocity);
  EXPECT_TRUE(v.pass);
  EXPECT_EQ(v.rank_NC, v.rank_NG);
  EXPECT_LE(v.command_consistency, 1e-6);
  const ForceCheck f = CheckForceSolution(inst_, guard_, step_.velocity.T, step_.force);
  EXPECT_TRUE(f.pass);
  EXPECT_EQ(f.guard_margins.size(), 27);
}

TEST_F(TiltingStep, ZeroedCommandRowFails) {
  Matrix C = step_.velocity.C;
  C.row(0).setZero();
  const VelocityCheck v = CheckVelocitySolution(inst_, C, step_.velocity.b_C);
  EXPECT_FALSE(v.pass);
  EXPECT_NE(v.rank_NC, v.rank_NG);
}

TEST_F(TiltingStep, WrongCommandSpeedFails) {
  Vector b_C = step_.velocity.b_C;
  b_C(0) += 0.1;
  EXPECT_FALSE(CheckVelocitySolution(inst_, step_.velocity.C, b_C).pass);
}

TEST_F(TiltingStep, CommandInsideConstraintRowsFails) {
  // A command the contacts already enforce leaves the goal direction free.
  const Matrix rows = linalg::RowSpaceBasis(inst_.N).basis;
  Matrix C = rows.col(0).transpose();
  EXPECT_FALSE(CheckVelocitySolution(inst_, C, C * step_.velocity.v_star).pass);
}

TEST_F(TiltingStep, AnyCompletingCommandPasses) {
  // The goal fixes v completely here, so every command row outside the
  // constraint rows that is consistent with v* describes the same motion.
  ASSERT_EQ(step_.velocity.dims.r_NG, inst_.n());
  std::mt19937_64 rng(3);
  Matrix C = step_.velocity.C;
  C.row(0) += 0.3 * testing::RandomVector(C.cols(), rng).transpose();
  EXPECT_TRUE(CheckVelocitySolution(inst_, C, C * step_.velocity.v_star).pass);
}

TEST(CheckVelocitySolution, RotatedCommandFailsWhenGoalLeavesFreedom) {
  std::mt19937_64 rng(21);
  int checked = 0;
  for (int trial = 0; trial < 40 && checked < 10; ++trial) {
    const SystemInstance inst = testing::RandomFeasibleInstance(rng);
    const VelocitySolution sol = SolveVelocity(inst, {});
    if (sol.n_av == 0 || sol.dims.r_NG == inst.n()) continue;
    ++checked;
    Matrix C = sol.C;
    C.row(0) += 0.3 * testing::RandomVector(C.cols(), rng).transpose();
    EXPECT_FALSE(CheckVelocitySolution(inst, C, C * sol.v_star).pass) << "trial " << trial;
  }
  EXPECT_GE(checked, 5);
}

TEST_F(TiltingStep, PerturbedForcesFail) {
  const Matrix& T = step_.velocity.T;
  Vector eta = step_.force.eta;
  eta(0) += 1e-3;
  const ForceCheck bad_eta = CheckForceSolution(inst_, guard_, T, step_.force.lambda, eta);
  EXPECT_FALSE(bad_eta.pass);
  EXPECT_GT(bad_eta.unactuated_residual, 1e-8);

  Vector lambda = step_.force.lambda;
  lambda(4) += 0.5;
  EXPECT_FALSE(CheckForceSolution(inst_, guard_, T, lambda, step_.force.eta).pass);
}

TEST_F(TiltingStep, ResolvedCommandStaysBalancedButLosesMargin) {
  // A different force command, re-solved for the free forces, still balances
  // but no longer maximizes the guard margin.
  const EquilibriumOracle oracle(inst_, guard_, step_.velocity.T, step_.velocity.n_av);
  Vector eta_af = step_.force.eta_af;
  eta_af(0) += 10.0;
  const Equilibrium eq = oracle.Solve(eta_af);
  const ForceCheck f = CheckForceSolution(inst_, guard_, step_.velocity.T, eq.lambda, eq.eta);
  EXPECT_LE(f.newton_residual, 1e-9);
  EXPECT_LT(oracle.Margin(eta_af, 50.0), step_.force.objective_margin);
}

TEST_F(TiltingStep, OracleAgreesWithSolver) {
  const EquilibriumOracle oracle(inst_, guard_, step_.velocity.T, step_.velocity.n_av);
  const Equilibrium eq = oracle.Solve(step_.force.eta_af);
  EXPECT_LE((eq.lambda - step_.force.lambda).cwiseAbs().maxCoeff(), 1e-7);
  EXPECT_LE((eq.eta - step_.force.eta).cwiseAbs().maxCoeff(), 1e-7);
  EXPECT_NEAR(oracle.Margin(step_.force.eta_af, 50.0), step_.force.objective_margin, 1e-7);
}

TEST(CheckVelocitySolution, NoCommandsPassesVacuously) {
  SystemInstance inst;
  inst.n_u = 1;
  inst.n_a = 1;
  inst.N = Matrix(1, 2);
  inst.N << 1, -1;
  inst.G = Matrix(1, 2);
  inst.G << 2, -2;
  inst.b_G = Vector::Zero(1);
  inst.F = Vector::Zero(2);
  const VelocityCheck v = CheckVelocitySolution(inst, Matrix::Zero(0, 2), Vector::Zero(0));
  EXPECT_TRUE(v.pass);
  EXPECT_FALSE(v.notes.empty());
}

TEST(CheckVelocitySolution, RandomInstancesPass) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    const SystemInstance inst = testing::RandomFeasibleInstance(rng);
    VelocitySolverConfig cfg;
    cfg.num_starts = 20;
    const VelocitySolution sol = SolveVelocity(inst, cfg);
    EXPECT_TRUE(CheckVelocitySolution(inst, sol).pass) << "trial " << trial;
  }
}

TEST(CheckForceSolution, NoContactsResidualIsDirect) {
  SystemInstance inst;
  inst.n_u = 0;
  inst.n_a = 3;
  inst.N = Matrix::Zero(0, 3);
  inst.G = Matrix::Zero(0, 3);
  inst.b_G = Vector::Zero(0);
  inst.F = Vector(3);
  inst.F << 1, -2, 0.5;
  const Matrix T = Matrix::Identity(3, 3);
  const Vector eta = Vector::Constant(3, 0.25);
  const ForceCheck f = CheckForceSolution(inst, EmptyGuard(0, 3), T, Vector::Zero(0), eta);
  EXPECT_NEAR(f.newton_residual, (eta + inst.F).norm(), 1e-14);
  EXPECT_FALSE(f.pass);
  EXPECT_TRUE(std::isinf(f.min_guard_margin));
  EXPECT_TRUE(CheckForceSolution(inst, EmptyGuard(0, 3), T, Vector::Zero(0), -inst.F).pass);
}

// Hand pressing an object onto a table: one unactuated and one actuated axis.
SystemInstance PressInstance(double weight) {
  SystemInstance inst;
  inst.n_u = 1;
  inst.n_a = 1;
  inst.N = Matrix(2, 2);
  inst.N << 1, 0, -1, 1;
  inst.G = Matrix::Zero(0, 2);
  inst.b_G = Vector::Zero(0);
  inst.F = Vector(2);
  inst.F << -weight, 0;
  return inst;
}

GuardConditions PressGuard(double n_min) {
  GuardConditions g = EmptyGuard(2, 2);
  g.Lambda = Matrix::Zero(2, 4);
  g.Lambda(0, 0) = -1.0;
  g.Lambda(1, 1) = -1.0;
  g.b_Lambda = Vector::Constant(2, -n_min);
  return g;
}

TEST(BruteForceForceOracle, OneDimensionalPress) {
  const SystemInstance inst = PressInstance(2.0);
  const OracleResult r = BruteForceForceOracle(inst, PressGuard(1.0), Matrix::Identity(2, 2), 0, 50.0);
  EXPECT_EQ(r.points, 401);
  // The LP optimum can exceed the best grid point by at most one grid cell.
  const ForceSolution sol = SolveForce(inst, PressGuard(1.0), Matrix::Identity(2, 2), 0, {});
  EXPECT_GE(sol.objective_margin, r.best_margin - 1e-9);
  EXPECT_LE(sol.objective_margin - r.best_margin, 0.25);
}

TEST(BruteForceForceOracle, InfeasibleGuardIsNegativeEverywhere) {
  GuardConditions g = PressGuard(1.0);
  g.Lambda.conservativeResize(3, 4);
  g.Lambda.row(2) << 1, 0, 0, 0;
  g.b_Lambda.conservativeResize(3);
  g.b_Lambda(2) = 0.5;
  const OracleResult r = BruteForceForceOracle(PressInstance(0.0), g, Matrix::Identity(2, 2), 0, 50.0);
  EXPECT_LT(r.best_margin, 0.0);
}

TEST(BruteForceForceOracle, RejectsHighDimensions) {
  SystemInstance inst;
  inst.n_u = 0;
  inst.n_a = 4;
  inst.N = Matrix::Zero(0, 4);
  inst.G = Matrix::Zero(0, 4);
  inst.b_G = Vector::Zero(0);
  inst.F = Vector::Zero(4);
  EXPECT_THROW(BruteForceForceOracle(inst, EmptyGuard(0, 4), Matrix::Identity(4, 4), 0, 1.0),
               SolverError);
}

}  // namespace
}  // namespace hybrid_servo::verify
