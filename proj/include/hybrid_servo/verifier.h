#pragma once

#include <string>
#include <vector>

#include "hybrid_servo/force_solver.h"
#include "hybrid_servo/system_model.h"
#include "hybrid_servo/velocity_solver.h"

namespace hybrid_servo::verify {

struct VelocityCheck {
  bool pass = false;
  int rank_NC = 0;
  int rank_NG = 0;
  /// max |G v| over an orthonormal basis of null([N; C]).
  double null_residual = 0.0;
  /// max |C v| over an orthonormal basis of null([N; G]).
  double reverse_null_residual = 0.0;
  /// ||G v_C - b_G|| for a particular solution v_C of {N v = 0, C v = b_C}.
  double goal_residual = 0.0;
  /// ||C v_G - b_C|| for a particular solution v_G of {N v = 0, G v = b_G}.
  double command_residual = 0.0;
  /// max ||C v - b_C|| over sampled v in Sol(N & G).
  double command_consistency = 0.0;
  std::vector<std::string> notes;
};

struct ForceCheck {
  bool pass = false;
  double newton_residual = 0.0;
  double unactuated_residual = 0.0;
  double gamma_residual = 0.0;
  Vector guard_margins;
  double min_guard_margin = 0.0;
  std::vector<std::string> notes;
};

struct VerificationReport {
  VelocityCheck velocity;
  ForceCheck force;
  bool pass() const { return velocity.pass && force.pass; }
};

struct OracleResult {
  double best_margin = 0.0;
  Vector best_eta_af;
  long points = 0;
};

constexpr int kNullSamples = 32;
constexpr double kDefaultGridResolution = 0.25;

/// Checks that {N v = 0, C v = b_C} and {N v = 0, G v = b_G} describe the same
/// set of velocities.
VelocityCheck CheckVelocitySolution(const SystemInstance& instance,
                                    const Matrix& C, const Vector& b_C,
                                    double rel_tol = linalg::kDefaultRankTol);

VelocityCheck CheckVelocitySolution(const SystemInstance& instance,
                                    const VelocitySolution& sol,
                                    double rel_tol = linalg::kDefaultRankTol);

/// Recomputes the balance, f_u = 0, Gamma and guard residuals from the raw
/// problem data and the returned forces.
ForceCheck CheckForceSolution(const SystemInstance& instance,
                              const GuardConditions& guard, const Matrix& T,
                              const Vector& lambda, const Vector& eta);

ForceCheck CheckForceSolution(const SystemInstance& instance,
                              const GuardConditions& guard, const Matrix& T,
                              const ForceSolution& sol);

/// Minimum-norm equilibrium free forces [lambda; eta_u; eta_av] for a fixed
/// command, computed without the force solver. Returns lambda and the full
/// eta.
struct Equilibrium {
  Vector lambda;
  Vector eta;
};

class EquilibriumOracle {
 public:
  EquilibriumOracle(const SystemInstance& instance, const GuardConditions& guard,
                    const Matrix& T, int n_av);

  Equilibrium Solve(const Vector& eta_af) const;
  /// Smallest of the guard margins and f_max - |eta_af_i|.
  double Margin(const Vector& eta_af, double f_max) const;
  Vector GuardMargins(const Vector& eta_af) const;

  int n_af() const { return n_af_; }

 private:
  int n_phi_ = 0;
  int n_u_ = 0;
  int n_af_ = 0;
  int n_av_ = 0;
  Matrix T_inv_;
  Matrix Lambda_;
  Vector b_Lambda_;
  // [lambda; eta] = base_ + map_ * eta_af
  Vector base_;
  Matrix map_;
};

/// Grid search of eta_af over [-f_max, f_max]^{n_af}. Requires n_af <= 3.
OracleResult BruteForceForceOracle(const SystemInstance& instance,
                                   const GuardConditions& guard,
                                   const Matrix& T, int n_av, double f_max,
                                   double grid_resolution = kDefaultGridResolution);

}  // namespace hybrid_servo::verify
