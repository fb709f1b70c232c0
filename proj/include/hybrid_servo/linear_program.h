#pragma once

#include <limits>

#include "hybrid_servo/subspace_linalg.h"

namespace hybrid_servo::lp {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// minimize c^T x  s.t.  A_eq x = b_eq,  A_ub x <= b_ub,  lower <= x <= upper.
/// Bounds may be +-kInf. Empty A_eq / A_ub must still have x.size() columns.
struct LinearProgram {
  Vector c;
  Matrix A_eq;
  Vector b_eq;
  Matrix A_ub;
  Vector b_ub;
  Vector lower;
  Vector upper;
};

enum class Status { kOptimal, kInfeasible, kUnbounded, kIterationLimit };

struct Result {
  Status status = Status::kIterationLimit;
  Vector x;
  double objective = 0.0;
  /// Sensitivity of the optimal objective to each b_ub entry (<= 0 for a
  /// minimization). A strictly negative entry marks a row that blocks any
  /// further improvement.
  Vector ub_duals;
  Vector eq_duals;
  int pivots = 0;
};

struct Options {
  double feasibility_tol = 1e-9;
  double optimality_tol = 1e-10;
  double pivot_tol = 1e-9;
  int max_pivots = 20000;
};

/// Dense two-phase primal simplex. Pivoting starts with Dantzig's rule and
/// falls back to Bland's rule after a run of degenerate pivots. The final
/// basis is refactorized from the original data to clean up tableau drift.
Result Solve(const LinearProgram& problem, const Options& options = {});

}  // namespace hybrid_servo::lp
