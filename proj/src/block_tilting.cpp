#include "hybrid_servo/block_tilting.h"

#include <cmath>

#include "hybrid_servo/errors.h"

namespace hybrid_servo::tilting {

namespace {

using Matrix3 = Eigen::Matrix3d;
using Vector4 = Eigen::Vector4d;

Matrix3 Hat(const Vector3& a) {
  Matrix3 m;
  m << 0.0, -a.z(), a.y(), a.z(), 0.0, -a.x(), -a.y(), a.x(), 0.0;
  return m;
}

Vector4 Wxyz(const Quaternion& q) { return Vector4(q.w(), q.x(), q.y(), q.z()); }

// d(R(q) a)/dq for the polynomial rotation, columns ordered (w, x, y, z).
Eigen::Matrix<double, 3, 4> RotatedPointJacobian(const Vector4& q,
                                                 const Vector3& a) {
  const double w = q(0);
  const Vector3 v = q.tail<3>();
  Eigen::Matrix<double, 3, 4> J;
  J.col(0) = 2.0 * w * a + 2.0 * v.cross(a);
  J.rightCols<3>() = -2.0 * a * v.transpose() +
                     2.0 * v.dot(a) * Matrix3::Identity() +
                     2.0 * v * a.transpose() - 2.0 * w * Hat(a);
  return J;
}

// Table contact points in the object frame, fixed by the initial pose.
std::array<Vector3, 2> TableContactsInObject(const TiltingScenario& s) {
  const Matrix3 R0 = s.initial_object.quat.toRotationMatrix();
  return {R0.transpose() * (s.table_contacts[0] - s.initial_object.p),
          R0.transpose() * (s.table_contacts[1] - s.initial_object.p)};
}

void Require(bool ok, const std::string& what) {
  if (!ok) throw SolverError(ErrorCode::kInvalidArgument, what);
}

void RequireUnitQuaternion(const Quaternion& q) {
  if (std::abs(Wxyz(q).norm() - 1.0) > 1e-9) {
    throw SolverError(ErrorCode::kInvalidArgument,
                      "quaternion is not unit length");
  }
}

}  // namespace

TiltingScenario TiltingScenario::ForEdgeLength(double edge) {
  TiltingScenario s;
  const double h = 0.5 * edge;
  s.edge_length = edge;
  s.hand_contact_obj = Vector3(0.0, 0.0, h);
  s.table_contacts = {Vector3(h, h, 0.0), Vector3(h, -h, 0.0)};
  s.initial_object.p = Vector3(0.0, 0.0, h);
  return s;
}

void ValidateScenario(const TiltingScenario& s) {
  Require(s.edge_length > 0.0, "edge_length must be positive");
  Require(s.mu_hand >= 0.0 && s.mu_table >= 0.0,
          "friction coefficients must be nonnegative");
  Require(s.n_min > 0.0, "n_min must be positive");
  Require(std::isfinite(s.tilt_rate), "tilt_rate must be finite");
  Require(s.time_step > 0.0, "time_step must be positive");
  Require(s.num_steps >= 1, "num_steps must be at least 1");
  Require(s.gravity_object.allFinite() && s.gravity_hand.allFinite() &&
              s.hand_contact_obj.allFinite() && s.initial_object.p.allFinite(),
          "scenario vectors must be finite");
  Require(std::abs(s.rotation_axis.norm() - 1.0) <= 1e-9,
          "rotation_axis must be a unit vector");
  const Vector3 edge = s.table_contacts[1] - s.table_contacts[0];
  Require(edge.norm() > 1e-9, "table contacts must be distinct");
  Require(s.rotation_axis.cross(edge.normalized()).norm() <= 1e-6,
          "rotation_axis must run along the table contact line");
  RequireUnitQuaternion(s.initial_object.quat);
}

Eigen::Matrix3d RotationPolynomial(const Vector4& q) {
  const double w = q(0);
  const Vector3 v = q.tail<3>();
  return (w * w - v.dot(v)) * Matrix3::Identity() + 2.0 * v * v.transpose() +
         2.0 * w * Hat(v);
}

Matrix QuatRateMap(const Quaternion& quat) {
  RequireUnitQuaternion(quat);
  const double q0 = quat.w(), q1 = quat.x(), q2 = quat.y(), q3 = quat.z();
  Matrix E(4, 3);
  E << -q1, -q2, -q3,
        q0, -q3,  q2,
        q3,  q0, -q1,
       -q2,  q1,  q0;
  return 0.5 * E;
}

Matrix OmegaMap(const TiltingState& state) {
  Matrix Om = Matrix::Zero(10, 9);
  Om.block<3, 3>(0, 0) = state.object.quat.toRotationMatrix();
  Om.block<4, 3>(3, 3) = QuatRateMap(state.object.quat);
  Om.block<3, 3>(7, 6).setIdentity();
  return Om;
}

std::pair<Matrix, Vector> GoalTwist(const TiltingState& state,
                                    const TiltingScenario& s) {
  const Vector3 omega_s = s.rotation_axis * s.tilt_rate;
  const Vector3 v_s = -s.rotation_axis.cross(s.table_contacts[0]) * s.tilt_rate;
  const Matrix3 R = state.object.quat.toRotationMatrix();
  const Vector3& p = state.object.p;

  Vector body(6);
  body.head<3>() = R.transpose() * (v_s - p.cross(omega_s));
  body.tail<3>() = R.transpose() * omega_s;

  Matrix G = Matrix::Zero(6, 9);
  G.leftCols(6).setIdentity();
  return {G, body};
}

HolonomicConstraint HolonomicJacobian(const TiltingState& state,
                                      const TiltingScenario& s) {
  const Vector4 q = Wxyz(state.object.quat);
  const Matrix3 R = RotationPolynomial(q);
  const Vector3& p = state.object.p;
  const auto table_obj = TableContactsInObject(s);

  HolonomicConstraint out;
  out.value = Vector::Zero(9);
  out.J_phi = Matrix::Zero(9, 10);

  // Hand contact: p_H - (R a + p_O) = 0.
  const Vector3& a = s.hand_contact_obj;
  out.value.segment<3>(0) = state.hand - (R * a + p);
  out.J_phi.block<3, 3>(0, 0) = -Matrix3::Identity();
  out.J_phi.block<3, 4>(0, 3) = -RotatedPointJacobian(q, a);
  out.J_phi.block<3, 3>(0, 7).setIdentity();

  // Table contacts: R b_i + p_O - p_tc,i = 0.
  for (int i = 0; i < 2; ++i) {
    const Vector3& b = table_obj[static_cast<std::size_t>(i)];
    const int row = 3 + 3 * i;
    out.value.segment<3>(row) = R * b + p - s.table_contacts[static_cast<std::size_t>(i)];
    out.J_phi.block<3, 3>(row, 0).setIdentity();
    out.J_phi.block<3, 4>(row, 3) = RotatedPointJacobian(q, b);
  }
  return out;
}

std::array<Vector3, 8> PyramidRidges() {
  std::array<Vector3, 8> d;
  for (int i = 1; i <= 8; ++i) {
    const double angle = M_PI * i / 4.0;
    d[static_cast<std::size_t>(i - 1)] = Vector3(std::sin(angle), std::cos(angle), 0.0);
  }
  return d;
}

GuardConditions TiltingGuard(const TiltingState& state,
                             const TiltingScenario& s) {
  const Matrix3 R_ow = state.object.quat.toRotationMatrix().transpose();
  const Vector3 z = Vector3::UnitZ();
  const auto ridges = PyramidRidges();

  GuardConditions guard;
  guard.Lambda = Matrix::Zero(27, 18);
  guard.b_Lambda = Vector::Zero(27);
  guard.Gamma = Matrix::Zero(0, 18);
  guard.b_Gamma = Vector::Zero(0);

  // Friction pyramids: d_i . lambda <= mu z . lambda, the hand force taken in
  // the object frame.
  for (int i = 0; i < 8; ++i) {
    const Vector3 hand_row = (ridges[static_cast<std::size_t>(i)] - s.mu_hand * z);
    guard.Lambda.block<1, 3>(i, 0) = (R_ow.transpose() * hand_row).transpose();
    const Vector3 table_row = ridges[static_cast<std::size_t>(i)] - s.mu_table * z;
    guard.Lambda.block<1, 3>(8 + i, 3) = table_row.transpose();
    guard.Lambda.block<1, 3>(16 + i, 6) = table_row.transpose();
  }
  // Normal force lower bounds.
  guard.Lambda.block<1, 3>(24, 0) = -(R_ow.transpose() * z).transpose();
  guard.Lambda.block<1, 3>(25, 3) = -z.transpose();
  guard.Lambda.block<1, 3>(26, 6) = -z.transpose();
  guard.b_Lambda.tail(3).setConstant(-s.n_min);
  return guard;
}

std::pair<SystemInstance, GuardConditions> BuildInstance(
    const TiltingState& state, const TiltingScenario& s) {
  ValidateScenario(s);
  SystemInstance inst;
  inst.n_u = 6;
  inst.n_a = 3;
  const HolonomicConstraint phi = HolonomicJacobian(state, s);
  const Matrix Om = OmegaMap(state);
  inst.J_phi = phi.J_phi;
  inst.Omega = Om;
  inst.N = AssembleN(phi.J_phi, Om);
  auto [G, b_G] = GoalTwist(state, s);
  inst.G = G;
  inst.b_G = b_G;

  const Matrix3 R = state.object.quat.toRotationMatrix();
  inst.F = Vector::Zero(9);
  inst.F.head<3>() = R.transpose() * s.gravity_object;
  inst.F.tail<3>() = s.gravity_hand;
  return {inst, TiltingGuard(state, s)};
}

TiltingState InitialState(const TiltingScenario& s) {
  TiltingState state;
  state.object = s.initial_object;
  state.hand = s.initial_object.quat.toRotationMatrix() * s.hand_contact_obj +
               s.initial_object.p;
  state.angle = 0.0;
  return state;
}

TiltingState AdvanceState(const TiltingState& state, const TiltingScenario& s,
                          double dt) {
  if (dt < 0.0) {
    throw SolverError(ErrorCode::kInvalidArgument, "dt must be nonnegative");
  }
  const double dtheta = s.tilt_rate * dt;
  const Eigen::AngleAxisd rot(dtheta, s.rotation_axis);
  const Matrix3 R = rot.toRotationMatrix();
  const Vector3& pivot = s.table_contacts[0];

  TiltingState next;
  next.object.p = pivot + R * (state.object.p - pivot);
  next.object.quat = (Quaternion(rot) * state.object.quat).normalized();
  next.hand = pivot + R * (state.hand - pivot);
  next.angle = state.angle + dtheta;
  return next;
}

std::vector<TiltingState> PlannedTrajectory(const TiltingScenario& s) {
  ValidateScenario(s);
  std::vector<TiltingState> states;
  states.push_back(InitialState(s));
  for (int k = 1; k < s.num_steps; ++k) {
    states.push_back(AdvanceState(states.back(), s, s.time_step));
  }
  return states;
}

Vector ConfigurationVector(const TiltingState& state) {
  Vector q(10);
  q.head<3>() = state.object.p;
  q.segment<4>(3) = Wxyz(state.object.quat);
  q.tail<3>() = state.hand;
  return q;
}

Vector3 PlannedHandVelocity(const TiltingState& state,
                            const TiltingScenario& s) {
  return (s.rotation_axis * s.tilt_rate).cross(state.hand - s.table_contacts[0]);
}

}  // namespace hybrid_servo::tilting
