#include "hybrid_servo/linear_program.h"

#include <random>

#include <gtest/gtest.h>

#include "test_support.h"

namespace hybrid_servo::lp {
namespace {

LinearProgram Make(int n) {
  LinearProgram p;
  p.c = Vector::Zero(n);
  p.A_eq = Matrix::Zero(0, n);
  p.b_eq = Vector::Zero(0);
  p.A_ub = Matrix::Zero(0, n);
  p.b_ub = Vector::Zero(0);
  p.lower = Vector::Zero(n);
  p.upper = Vector::Constant(n, kInf);
  return p;
}

TEST(LinearProgram, TextbookMaximization) {
  LinearProgram p = Make(2);
  p.c << -3, -5;
  p.A_ub = Matrix(3, 2);
  p.A_ub << 1, 0, 0, 2, 3, 2;
  p.b_ub = Vector(3);
  p.b_ub << 4, 12, 18;
  const Result r = Solve(p);
  ASSERT_EQ(r.status, Status::kOptimal);
  EXPECT_NEAR(r.x(0), 2.0, 1e-9);
  EXPECT_NEAR(r.x(1), 6.0, 1e-9);
  EXPECT_NEAR(r.objective, -36.0, 1e-9);
  EXPECT_NEAR(r.ub_duals(0), 0.0, 1e-9);
  EXPECT_NEAR(r.ub_duals(1), -1.5, 1e-9);
  EXPECT_NEAR(r.ub_duals(2), -1.0, 1e-9);
}

TEST(LinearProgram, MixedBoundsAndEquality) {
  LinearProgram p = Make(3);
  p.c << -1, 2, 3;
  p.A_eq = Matrix(1, 3);
  p.A_eq << 1, 1, 1;
  p.b_eq = Vector::Ones(1);
  p.A_ub = Matrix(1, 3);
  p.A_ub << -1, 1, 0;
  p.b_ub = Vector::Constant(1, 0.5);
  p.lower << 0.2, -2, -1;
  p.upper << 4, kInf, 2;
  const Result r = Solve(p);
  ASSERT_EQ(r.status, Status::kOptimal);
  EXPECT_NEAR(r.objective, -11.0, 1e-9);
  EXPECT_NEAR(r.x(0), 4.0, 1e-9);
  EXPECT_NEAR(r.x(1), -2.0, 1e-9);
  EXPECT_NEAR(r.x(2), -1.0, 1e-9);
}

TEST(LinearProgram, Unbounded) {
  LinearProgram p = Make(3);
  p.c << 1, 2, 3;
  p.A_eq = Matrix(1, 3);
  p.A_eq << 1, 1, 1;
  p.b_eq = Vector::Ones(1);
  p.A_ub = Matrix(1, 3);
  p.A_ub << -1, 1, 0;
  p.b_ub = Vector::Constant(1, 0.5);
  p.lower << 0.2, -kInf, -1;
  p.upper << kInf, kInf, 2;
  EXPECT_EQ(Solve(p).status, Status::kUnbounded);
}

TEST(LinearProgram, Infeasible) {
  LinearProgram p = Make(1);
  p.c << 1;
  p.A_ub = Matrix(2, 1);
  p.A_ub << 1, -1;
  p.b_ub = Vector(2);
  p.b_ub << 1, -2;  // x <= 1 and x >= 2
  EXPECT_EQ(Solve(p).status, Status::kInfeasible);
}

TEST(LinearProgram, CrossedBoundsAreInfeasible) {
  LinearProgram p = Make(1);
  p.lower << 1;
  p.upper << 0;
  EXPECT_EQ(Solve(p).status, Status::kInfeasible);
}

TEST(LinearProgram, DegenerateVertex) {
  LinearProgram p = Make(2);
  p.c << -1, -1;
  p.A_ub = Matrix(5, 2);
  p.A_ub << 1, 1, 1, 0, 0, 1, 1, 2, 2, 1;
  p.b_ub = Vector(5);
  p.b_ub << 1, 1, 1, 2, 2;
  const Result r = Solve(p);
  ASSERT_EQ(r.status, Status::kOptimal);
  EXPECT_NEAR(r.objective, -1.0, 1e-9);
}

TEST(LinearProgram, RedundantEqualities) {
  LinearProgram p = Make(2);
  p.c << 1, 1;
  p.A_eq = Matrix(2, 2);
  p.A_eq << 1, 2, 2, 4;
  p.b_eq = Vector(2);
  p.b_eq << 2, 4;
  const Result r = Solve(p);
  ASSERT_EQ(r.status, Status::kOptimal);
  EXPECT_NEAR(r.objective, 1.0, 1e-9);
}

// Random bounded LPs: the optimum is feasible and no random feasible point
// beats it; the dual vector certifies optimality through weak duality.
TEST(LinearProgram, RandomBoxedProblemsProperty) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = testing::UniformInt(1, 6, rng);
    const int m = testing::UniformInt(0, 8, rng);
    LinearProgram p = Make(n);
    p.c = testing::RandomVector(n, rng);
    p.lower.setConstant(-1.0);
    p.upper.setConstant(1.0);
    p.A_ub = testing::RandomMatrix(m, n, rng);
    p.b_ub = p.A_ub.cwiseAbs().rowwise().sum() * 0.5 + Vector::Constant(m, 0.1);
    const Result r = Solve(p);
    ASSERT_EQ(r.status, Status::kOptimal);
    if (m > 0) EXPECT_LE((p.A_ub * r.x - p.b_ub).maxCoeff(), 1e-8);
    EXPECT_LE(r.x.cwiseAbs().maxCoeff(), 1.0 + 1e-9);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int s = 0; s < 200; ++s) {
      Vector x(n);
      for (int i = 0; i < n; ++i) x(i) = u(rng);
      if (m > 0 && (p.A_ub * x - p.b_ub).maxCoeff() > 0.0) continue;
      EXPECT_GE(p.c.dot(x), r.objective - 1e-9);
    }
  }
}

}  // namespace
}  // namespace hybrid_servo::lp
