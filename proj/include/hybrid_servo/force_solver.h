#pragma once

#include <string>
#include <vector>

#include "hybrid_servo/subspace_linalg.h"
#include "hybrid_servo/system_model.h"

namespace hybrid_servo {

struct ForceSolverConfig {
  /// Bound on every force-command component, also the margin cap.
  double f_max = 50.0;
  /// Break ties among max-min optima by maximizing the remaining margins
  /// lexicographically.
  bool lexicographic = true;
};

/// Quasi-static balance written over the free forces f_free = [lambda; eta_u;
/// eta_av] and the force command eta_af:
///   M_free f_free + M_eta_f eta_af = rhs
/// stacking the f_u = 0 rows, the transformed Newton rows and the Gamma rows.
/// The guard inequalities are carried along in the same split.
struct NewtonAssembly {
  int n_phi = 0;
  int n_u = 0;
  int n_af = 0;
  int n_av = 0;
  Matrix M_free;
  Matrix M_eta_f;
  Vector rhs;
  Matrix guard_free;   // Lambda columns acting on f_free
  Matrix guard_eta_f;  // Lambda columns acting on eta_af
  Vector b_Lambda;
  Matrix T_inv;
  std::vector<std::string> free_force_layout;

  int num_free() const { return static_cast<int>(M_free.cols()); }
};

/// KKT system of min ||f_free||^2 s.t. M_free f_free = rhs - M_eta_f eta_af:
///   K [f_free; f_dual] = rhs_const + rhs_eta_map * eta_af
/// with K = [[2I, M_free^T], [M_free, 0]].
struct KktSystem {
  Matrix K;
  Vector rhs_const;
  Matrix rhs_eta_map;
  int num_free = 0;
};

struct ForceSolution {
  Vector eta_af;
  Vector lambda;
  Vector eta;
  Vector f_free;
  Vector f_free_dual;
  /// b_Lambda - Lambda [lambda; f] at the returned solution.
  Vector guard_margins;
  /// Optimal value of the minimum margin (guard rows and force-box rows).
  double objective_margin = 0.0;
  int lp_solves = 0;
};

/// Splits the transformed balance into free and commanded columns. T must be
/// diag(I_{n_u}, R_a) with R_a invertible; the last n_av actuated rows are
/// velocity controlled. Throws SolverError(kSingularTransform).
NewtonAssembly AssembleNewton(const SystemInstance& instance,
                              const GuardConditions& guard, const Matrix& T,
                              int n_av);

KktSystem BuildKkt(const NewtonAssembly& assembly);

struct KktSolution {
  Vector f_free;
  Vector f_free_dual;
};

/// Free forces for a fixed command. Throws SolverError(kSingularSystem) when
/// M_free is rank deficient.
KktSolution SolveKkt(const KktSystem& kkt, const Vector& eta_af);

/// Solves the force command that maximizes the smallest guard margin while
/// keeping the free forces at their minimum-norm equilibrium. Returns the
/// solution even when the best margin is negative. Balance rows that no free
/// force can absorb constrain the command directly; when they cannot hold for
/// any command, throws SolverError(kSingularSystem).
ForceSolution MaximizeGuardMargin(const SystemInstance& instance,
                                  const GuardConditions& guard,
                                  const Matrix& T, int n_av,
                                  const ForceSolverConfig& config);

/// As MaximizeGuardMargin, but throws SolverError(kInfeasibleLP) when no
/// command satisfies the guard conditions (best margin < -1e-8).
ForceSolution SolveForce(const SystemInstance& instance,
                         const GuardConditions& guard, const Matrix& T,
                         int n_av, const ForceSolverConfig& config);

}  // namespace hybrid_servo
