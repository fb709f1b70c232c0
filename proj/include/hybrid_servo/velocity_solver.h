#pragma once

#include <cstdint>
#include <vector>

#include "hybrid_servo/subspace_linalg.h"
#include "hybrid_servo/system_model.h"

namespace hybrid_servo {

struct VelocitySolverConfig {
  int num_starts = 3;
  double step_length = 10.0;
  int max_iters = 200;
  double convergence_tol = 1e-8;
  std::uint64_t rng_seed = 0;
  double rank_tol = linalg::kDefaultRankTol;
};

struct VelocityDimensions {
  int n_av_min = 0;
  int n_av_max = 0;
  int n_av = 0;
  int r_N = 0;
  int r_NG = 0;
};

struct VelocitySolution {
  Matrix C;       // n_av x n, unit rows, zero unactuated columns
  Vector b_C;     // w_av
  Matrix T;
  Matrix R_a;
  int n_av = 0;
  double cost = 0.0;
  std::vector<double> per_start_costs;
  int selected_start = -1;
  bool converged = true;
  VelocityDimensions dims;
  Vector v_star;  // min-norm solution of {N v = 0, G v = b_G}
};

struct PgdResult {
  Matrix k;  // n_c x n_av coefficients, columns normalized so ||B_c k_i|| = 1
  double cost = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> cost_history;
};

/// Velocity-control dimension counts. The chosen n_av is the minimum number
/// of velocity commands that reduce Sol(N) down to Sol(N & G).
VelocityDimensions ComputeDimensions(const Matrix& N, const Matrix& G,
                                     double rel_tol = linalg::kDefaultRankTol);

/// True iff the constraints plus the actuators can fully constrain the
/// system: r_N + n_a >= n.
bool CheckFeasibility(int n, int n_a, int r_N);

/// Orthonormal basis of admissible velocity-command rows c: c is orthogonal
/// to null([N; G]) and vanishes on the unactuated coordinates. Throws
/// SolverError(kEmptyBasis) if it has fewer than n_av columns.
Matrix CandidateBasis(const Matrix& N, const Matrix& G, int n_u,
                      double rel_tol = linalg::kDefaultRankTol);

/// Direction cost: sum_{i != j} |c_i . c_j| - sum_i ||Null(N)^T c_i|| with
/// c_i = B_c k_i.
double DirectionCost(const Matrix& k, const Matrix& B_c, const Matrix& null_N);

/// Renormalizes every column so that ||B_c k_i|| = 1.
Matrix ProjectCoefficients(const Matrix& k, const Matrix& B_c);

/// Projected (sub)gradient descent from a given start.
PgdResult ProjectedGradientDescent(const Matrix& B_c, const Matrix& null_N,
                                   const Matrix& k0,
                                   const VelocitySolverConfig& config);

/// Projected gradient descent from the random start with the given index.
/// The start draws standard-normal coefficients from a stream seeded with
/// config.rng_seed + start_index.
PgdResult ProjectedGradientDescent(const Matrix& B_c, const Matrix& null_N,
                                   int n_av, const VelocitySolverConfig& config,
                                   int start_index);

/// Random standard-normal start for the given stream index (unprojected).
Matrix RandomStart(int n_c, int n_av, std::uint64_t seed, int start_index);

/// Solves for the velocity-controlled actions: dimensions, directions C,
/// the transform T and the magnitudes w_av.
VelocitySolution SolveVelocity(const SystemInstance& instance,
                               const VelocitySolverConfig& config);

}  // namespace hybrid_servo
