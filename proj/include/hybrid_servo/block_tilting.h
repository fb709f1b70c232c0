#pragma once

#include <array>
#include <utility>

#include <Eigen/Geometry>

#include "hybrid_servo/system_model.h"

namespace hybrid_servo::tilting {

using Vector3 = Eigen::Vector3d;
using Quaternion = Eigen::Quaterniond;

/// Rigid pose. The quaternion is always handled in (w, x, y, z) order.
struct Pose {
  Vector3 p = Vector3::Zero();
  Quaternion quat = Quaternion::Identity();
};

/// A cube tilted about one of its bottom edges by a point hand pressing on
/// it. Lengths in meters, forces in Newtons, angles in radians.
///
/// Sign conventions: the table reaction lambda_tc,i is the force the table
/// applies on the object (world frame); the hand reaction lambda_hc is the
/// force the object applies on the hand (world frame). Both have a positive
/// normal component when the contact is pressed.
struct TiltingScenario {
  double edge_length = 0.075;
  double mu_hand = 0.8;
  double mu_table = 0.8;
  double n_min = 0.5;
  Vector3 gravity_object = Vector3(0.0, 0.0, -2.5);
  Vector3 gravity_hand = Vector3::Zero();
  /// Hand contact in the object frame (object frame at the cube center).
  Vector3 hand_contact_obj = Vector3(0.0, 0.0, 0.0375);
  /// Endpoints of the table line contact, world frame.
  std::array<Vector3, 2> table_contacts = {Vector3(0.0375, 0.0375, 0.0),
                                           Vector3(0.0375, -0.0375, 0.0)};
  Vector3 rotation_axis = Vector3::UnitY();
  double tilt_rate = 0.1047197551196598;  // pi/30 rad/s
  double time_step = 1.0;
  int num_steps = 15;
  Pose initial_object = {Vector3(0.0, 0.0, 0.0375), Quaternion::Identity()};

  /// Default scenario for a cube of the given edge length.
  static TiltingScenario ForEdgeLength(double edge);
};

/// Object pose plus hand position: q = [p_O, quat_O, p_H] in R^10.
struct TiltingState {
  Pose object;
  Vector3 hand = Vector3::Zero();
  double angle = 0.0;  // accumulated tilt
};

/// Throws SolverError(kInvalidArgument) on an ill-posed scenario.
void ValidateScenario(const TiltingScenario& scenario);

/// Body angular velocity to quaternion rate, 4x3.
Matrix QuatRateMap(const Quaternion& quat);

/// Rotation matrix written as a polynomial in the quaternion components; equal
/// to quat.toRotationMatrix() for unit quaternions.
Eigen::Matrix3d RotationPolynomial(const Eigen::Vector4d& wxyz);

/// q-dot = Omega v for v = [object body twist (linear, angular); hand
/// velocity]; 10x9.
Matrix OmegaMap(const TiltingState& state);

/// Goal on the object body twist matching the planned rotation about the
/// table edge. G = [I_6 0], b_G = body twist.
std::pair<Matrix, Vector> GoalTwist(const TiltingState& state,
                                    const TiltingScenario& scenario);

struct HolonomicConstraint {
  Vector value;  // 9
  Matrix J_phi;  // 9 x 10
};

/// Stacked sticking constraints for the hand contact and the two table
/// contacts, and their derivative with respect to q.
HolonomicConstraint HolonomicJacobian(const TiltingState& state,
                                      const TiltingScenario& scenario);

/// Eight-sided friction pyramids and normal-force lower bounds for the three
/// contacts: 24 + 3 rows over [lambda; f].
GuardConditions TiltingGuard(const TiltingState& state,
                             const TiltingScenario& scenario);

/// Full one-step problem for the given state.
std::pair<SystemInstance, GuardConditions> BuildInstance(
    const TiltingState& state, const TiltingScenario& scenario);

TiltingState InitialState(const TiltingScenario& scenario);

/// Rotates object and hand rigidly about the table edge by tilt_rate * dt.
TiltingState AdvanceState(const TiltingState& state,
                          const TiltingScenario& scenario, double dt);

/// The num_steps planned states, starting at the initial state.
std::vector<TiltingState> PlannedTrajectory(const TiltingScenario& scenario);

/// Configuration vector [p_O; quat (w,x,y,z); p_H].
Vector ConfigurationVector(const TiltingState& state);

/// Hand velocity along the planned arc.
Vector3 PlannedHandVelocity(const TiltingState& state,
                            const TiltingScenario& scenario);

/// Ridge directions d_i = (sin(pi i/4), cos(pi i/4), 0), i = 1..8.
std::array<Vector3, 8> PyramidRidges();

}  // namespace hybrid_servo::tilting
