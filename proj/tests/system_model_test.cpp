#include "hybrid_servo/system_model.h"

#include <limits>

#include <gtest/gtest.h>

#include "hybrid_servo/block_tilting.h"

namespace hybrid_servo {
namespace {

SystemInstance SmallInstance() {
  SystemInstance inst;
  inst.n_u = 1;
  inst.n_a = 2;
  inst.N = Matrix::Zero(1, 3);
  inst.N << 1, -1, 0;
  inst.G = Matrix::Zero(1, 3);
  inst.G << 0, 0, 1;
  inst.b_G = Vector::Constant(1, 0.5);
  inst.F = Vector::Zero(3);
  return inst;
}

TEST(Validate, TiltingInstanceIsClean) {
  tilting::TiltingScenario s;
  const auto [inst, guard] = tilting::BuildInstance(tilting::InitialState(s), s);
  EXPECT_TRUE(Validate(inst, guard).empty());
}

TEST(Validate, GoalColumnMismatch) {
  SystemInstance inst = SmallInstance();
  inst.G = Matrix::Zero(1, 4);
  const auto issues = Validate(inst, EmptyGuard(1, 3));
  ASSERT_EQ(issues.size(), 1u);
  EXPECT_EQ(issues[0].kind, ValidationIssue::Kind::kDimensionMismatch);
}

TEST(Validate, NonFiniteForce) {
  SystemInstance inst = SmallInstance();
  inst.F(2) = std::numeric_limits<double>::quiet_NaN();
  const auto issues = Validate(inst, EmptyGuard(1, 3));
  ASSERT_EQ(issues.size(), 1u);
  EXPECT_EQ(issues[0].kind, ValidationIssue::Kind::kNonFinite);
}

TEST(Validate, ProductMismatch) {
  SystemInstance inst = SmallInstance();
  inst.J_phi = Matrix::Identity(1, 1);
  inst.Omega = Matrix::Zero(1, 3);
  const auto issues = Validate(inst, EmptyGuard(1, 3));
  ASSERT_EQ(issues.size(), 1u);
  EXPECT_EQ(issues[0].kind, ValidationIssue::Kind::kInconsistentProduct);
}

TEST(Validate, GuardColumnsMustCoverLambdaAndForce) {
  SystemInstance inst = SmallInstance();
  GuardConditions guard = EmptyGuard(1, 3);
  guard.Lambda = Matrix::Zero(2, 3);
  guard.b_Lambda = Vector::Zero(2);
  EXPECT_FALSE(Validate(inst, guard).empty());
}

TEST(AssembleN, IdentityAndZero) {
  EXPECT_TRUE(AssembleN(Matrix::Identity(3, 3), Matrix::Identity(3, 3)).isApprox(Matrix::Identity(3, 3)));
  EXPECT_TRUE(AssembleN(Matrix::Zero(2, 4), Matrix::Ones(4, 3)).isZero());
}

TEST(Transform, UpperLeftBlockIsIdentity) {
  Matrix R_a(2, 2);
  R_a << 0, 1, -1, 0;
  const Matrix T = TransformFromActuatedBlock(2, R_a);
  Vector v(4);
  v << 1.5, -2.0, 3.0, 4.0;
  const Vector w = T * v;
  EXPECT_EQ(w(0), v(0));
  EXPECT_EQ(w(1), v(1));
  EXPECT_TRUE(T.bottomRightCorner(2, 2) == R_a);
}

TEST(UnactuatedSelector, Shape) {
  const Matrix H = UnactuatedSelector(2, 3);
  EXPECT_EQ(H.rows(), 2);
  EXPECT_EQ(H.cols(), 5);
  EXPECT_TRUE(H.leftCols(2).isIdentity());
  EXPECT_TRUE(H.rightCols(3).isZero());
}

TEST(CheckActionInvariants, DetectsViolations) {
  HybridAction a;
  a.n_av = 1;
  a.n_af = 1;
  a.R_a = Matrix::Identity(2, 2);
  a.T = TransformFromActuatedBlock(1, a.R_a);
  a.w_av = Vector::Zero(1);
  a.eta_af = Vector::Zero(1);
  a.lambda = Vector::Zero(0);
  a.eta = Vector::Zero(3);
  EXPECT_TRUE(CheckActionInvariants(a, 1).empty());

  HybridAction bad_eta = a;
  bad_eta.eta(0) = 1e-3;
  EXPECT_FALSE(CheckActionInvariants(bad_eta, 1).empty());

  HybridAction bad_T = a;
  bad_T.T(0, 1) = 0.5;
  EXPECT_FALSE(CheckActionInvariants(bad_T, 1).empty());

  HybridAction bad_counts = a;
  bad_counts.n_af = 2;
  EXPECT_FALSE(CheckActionInvariants(bad_counts, 1).empty());

  HybridAction singular = a;
  singular.R_a(1, 1) = 0.0;
  singular.T = TransformFromActuatedBlock(1, singular.R_a);
  EXPECT_FALSE(CheckActionInvariants(singular, 1).empty());
}

}  // namespace
}  // namespace hybrid_servo
