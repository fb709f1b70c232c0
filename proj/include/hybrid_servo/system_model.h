#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hybrid_servo/subspace_linalg.h"

namespace hybrid_servo {

/// One time step of a quasi-static rigid-body system.
///
/// The generalized velocity v (length n) is ordered [v_u; v_a]: the first
/// n_u entries are unactuated, the last n_a are robot actuation. N is the
/// holonomic velocity constraint (N v = 0), G/b_G the goal (G v = b_G) and F
/// the external generalized force. When the Jacobian J_phi and the velocity
/// map Omega are both known they are kept alongside N = J_phi * Omega so
/// independent checks can recompute it.
struct SystemInstance {
  int n_u = 0;
  int n_a = 0;
  Matrix N;
  Matrix G;
  Vector b_G;
  Vector F;
  std::optional<Matrix> J_phi;
  std::optional<Matrix> Omega;

  int n() const { return n_u + n_a; }
  int n_phi() const { return static_cast<int>(N.rows()); }
};

/// Affine guard conditions on the stacked force vector [lambda; f]:
/// Lambda [lambda; f] <= b_Lambda and Gamma [lambda; f] = b_Gamma.
struct GuardConditions {
  Matrix Lambda;
  Vector b_Lambda;
  Matrix Gamma;
  Vector b_Gamma;
};

/// Guard with no rows for a system with n_phi constraints and n velocities.
GuardConditions EmptyGuard(int n_phi, int n);

/// The hybrid force-velocity action for one step.
///
/// T = diag(I_{n_u}, R_a) maps generalized quantities into the action frame:
/// w = T v and eta = T f. Within the actuated block, the first n_af rows of
/// R_a are force-controlled axes and the last n_av rows velocity-controlled.
struct HybridAction {
  int n_av = 0;
  int n_af = 0;
  Matrix T;
  Matrix R_a;
  Vector w_av;
  Vector eta_af;
  Vector lambda;
  Vector eta;
};

struct ValidationIssue {
  enum class Kind { kDimensionMismatch, kNonFinite, kInconsistentProduct };
  Kind kind;
  std::string message;
};

/// Structural checks on the problem data. An empty result means well-formed.
std::vector<ValidationIssue> Validate(const SystemInstance& instance,
                                      const GuardConditions& guard);

/// N = J_phi * Omega.
Matrix AssembleN(const Matrix& J_phi, const Matrix& Omega);

/// Selection matrix H = [I_{n_u} 0] that picks the unactuated force block.
Matrix UnactuatedSelector(int n_u, int n_a);

/// T = diag(I_{n_u}, R_a).
Matrix TransformFromActuatedBlock(int n_u, const Matrix& R_a);

/// Returns the violated HybridAction invariants (empty when consistent).
std::vector<std::string> CheckActionInvariants(const HybridAction& action,
                                               int n_u);

}  // namespace hybrid_servo
