#include "hybrid_servo/velocity_solver.h"

#include <cmath>
#include <limits>
#include <random>

#include "hybrid_servo/errors.h"

namespace hybrid_servo {

namespace {

constexpr double kNormGuard = 1e-12;
constexpr double kDescentSlack = 1e-12;
constexpr int kMaxHalvings = 40;

double Sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

// Gradient of DirectionCost with respect to k.
Matrix CostGradient(const Matrix& k, const Matrix& B_c, const Matrix& null_N) {
  const Matrix c = B_c * k;
  const Eigen::Index n_av = c.cols();
  Matrix grad_c = Matrix::Zero(c.rows(), n_av);
  for (Eigen::Index i = 0; i < n_av; ++i) {
    for (Eigen::Index j = 0; j < n_av; ++j) {
      if (i == j) continue;
      grad_c.col(i) += 2.0 * Sign(c.col(i).dot(c.col(j))) * c.col(j);
    }
    if (null_N.cols() > 0) {
      const Vector proj = null_N.transpose() * c.col(i);
      const double norm = proj.norm();
      if (norm >= kNormGuard) grad_c.col(i) -= null_N * proj / norm;
    }
  }
  return B_c.transpose() * grad_c;
}

Matrix ZeroRows(Eigen::Index cols) { return Matrix::Zero(0, cols); }

}  // namespace

VelocityDimensions ComputeDimensions(const Matrix& N, const Matrix& G,
                                     double rel_tol) {
  const Eigen::Index n = G.cols();
  if (N.rows() > 0 && N.cols() != n) {
    throw SolverError(ErrorCode::kDimensionMismatch,
                      "N and G must have the same column count");
  }
  const Matrix N_ = N.rows() == 0 ? ZeroRows(n) : N;
  VelocityDimensions d;
  d.r_N = linalg::NumericalRank(N_, rel_tol);
  d.r_NG = linalg::NumericalRank(linalg::StackRows(N_, G), rel_tol);
  d.n_av_min = d.r_NG - d.r_N;
  d.n_av_max = static_cast<int>(n) - d.r_N;
  d.n_av = d.n_av_min;
  return d;
}

bool CheckFeasibility(int n, int n_a, int r_N) { return r_N + n_a >= n; }

Matrix CandidateBasis(const Matrix& N, const Matrix& G, int n_u,
                      double rel_tol) {
  const Eigen::Index n = G.cols();
  const Matrix N_ = N.rows() == 0 ? ZeroRows(n) : N;
  const Matrix NG = linalg::StackRows(N_, G);
  const linalg::SubspaceBasis sigma = linalg::NullSpaceBasis(NG, rel_tol);
  const int n_av = linalg::NumericalRank(NG, rel_tol) -
                   linalg::NumericalRank(N_, rel_tol);

  Matrix constraint(sigma.dim() + n_u, n);
  constraint.topRows(sigma.dim()) = sigma.basis.transpose();
  constraint.bottomRows(n_u) = UnactuatedSelector(n_u, n - n_u);
  Matrix B_c = linalg::NullSpaceBasis(constraint, rel_tol).basis;
  if (B_c.cols() < n_av) {
    throw SolverError(ErrorCode::kEmptyBasis,
                      "only " + std::to_string(B_c.cols()) +
                          " admissible command directions for n_av = " +
                          std::to_string(n_av));
  }
  return B_c;
}

double DirectionCost(const Matrix& k, const Matrix& B_c, const Matrix& null_N) {
  const Matrix c = B_c * k;
  double cost = 0.0;
  for (Eigen::Index i = 0; i < c.cols(); ++i) {
    for (Eigen::Index j = 0; j < c.cols(); ++j) {
      if (i != j) cost += std::abs(c.col(i).dot(c.col(j)));
    }
    if (null_N.cols() > 0) cost -= (null_N.transpose() * c.col(i)).norm();
  }
  return cost;
}

Matrix ProjectCoefficients(const Matrix& k, const Matrix& B_c) {
  Matrix out = k;
  for (Eigen::Index i = 0; i < k.cols(); ++i) {
    const double norm = (B_c * k.col(i)).norm();
    if (norm < kNormGuard) {
      // Degenerate column: restart it on the first basis direction.
      out.col(i).setZero();
      out(i % k.rows(), i) = 1.0;
      out.col(i) /= (B_c * out.col(i)).norm();
    } else {
      out.col(i) /= norm;
    }
  }
  return out;
}

Matrix RandomStart(int n_c, int n_av, std::uint64_t seed, int start_index) {
  std::mt19937_64 rng(seed + static_cast<std::uint64_t>(start_index));
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix k(n_c, n_av);
  for (Eigen::Index j = 0; j < k.cols(); ++j) {
    for (Eigen::Index i = 0; i < k.rows(); ++i) k(i, j) = normal(rng);
  }
  return k;
}

PgdResult ProjectedGradientDescent(const Matrix& B_c, const Matrix& null_N,
                                   const Matrix& k0,
                                   const VelocitySolverConfig& config) {
  PgdResult out;
  Matrix k = ProjectCoefficients(k0, B_c);
  double cost = DirectionCost(k, B_c, null_N);
  out.cost_history.push_back(cost);

  for (int iter = 0; iter < config.max_iters; ++iter) {
    out.iterations = iter + 1;
    const Matrix grad = CostGradient(k, B_c, null_N);
    // The nominal step is config.step_length; it is halved only when the full
    // step would increase the (non-smooth) cost.
    double t = config.step_length;
    bool accepted = false;
    Matrix k_next;
    double cost_next = cost;
    for (int h = 0; h <= kMaxHalvings; ++h, t *= 0.5) {
      k_next = ProjectCoefficients(k - t * grad, B_c);
      cost_next = DirectionCost(k_next, B_c, null_N);
      if (cost_next <= cost + kDescentSlack) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      out.converged = true;
      break;
    }
    const double step = (k_next - k).norm();
    k = k_next;
    cost = cost_next;
    out.cost_history.push_back(cost);
    if (step < config.convergence_tol) {
      out.converged = true;
      break;
    }
  }
  out.k = k;
  out.cost = cost;
  return out;
}

PgdResult ProjectedGradientDescent(const Matrix& B_c, const Matrix& null_N,
                                   int n_av, const VelocitySolverConfig& config,
                                   int start_index) {
  const Matrix k0 = RandomStart(static_cast<int>(B_c.cols()), n_av,
                                config.rng_seed, start_index);
  return ProjectedGradientDescent(B_c, null_N, k0, config);
}

VelocitySolution SolveVelocity(const SystemInstance& instance,
                               const VelocitySolverConfig& config) {
  if (config.num_starts < 1 || !(config.step_length > 0.0)) {
    throw SolverError(ErrorCode::kInvalidArgument,
                      "num_starts must be >= 1 and step_length > 0");
  }
  const int n = instance.n();
  const int n_u = instance.n_u;
  const int n_a = instance.n_a;
  const Matrix N = instance.N.rows() == 0 ? ZeroRows(n) : instance.N;

  VelocitySolution sol;
  sol.dims = ComputeDimensions(N, instance.G, config.rank_tol);
  if (!CheckFeasibility(n, n_a, sol.dims.r_N)) {
    throw SolverError(ErrorCode::kInfeasibleDimensions,
                      "r_N + n_a = " + std::to_string(sol.dims.r_N + n_a) +
                          " < n = " + std::to_string(n));
  }
  sol.n_av = sol.dims.n_av;

  const Matrix NG = linalg::StackRows(N, instance.G);
  Vector rhs = Vector::Zero(NG.rows());
  rhs.tail(instance.b_G.size()) = instance.b_G;
  try {
    sol.v_star = linalg::MinNormSolution(NG, rhs, config.rank_tol);
  } catch (const SolverError& e) {
    if (e.code() != ErrorCode::kInconsistentSystem) throw;
    throw SolverError(ErrorCode::kInconsistentGoal,
                      "no velocity satisfies N v = 0 and G v = b_G");
  }

  if (sol.n_av == 0) {
    sol.C = Matrix::Zero(0, n);
    sol.b_C = Vector::Zero(0);
    sol.R_a = Matrix::Identity(n_a, n_a);
    sol.T = TransformFromActuatedBlock(n_u, sol.R_a);
    sol.cost = 0.0;
    return sol;
  }

  const Matrix B_c = CandidateBasis(N, instance.G, n_u, config.rank_tol);
  const Matrix null_N = linalg::NullSpaceBasis(N, config.rank_tol).basis;

  PgdResult best;
  best.cost = std::numeric_limits<double>::infinity();
  for (int s = 0; s < config.num_starts; ++s) {
    PgdResult run = ProjectedGradientDescent(B_c, null_N, sol.n_av, config, s);
    sol.per_start_costs.push_back(run.cost);
    // Ties within 1e-12 keep the earlier start.
    if (run.cost < best.cost - 1e-12) {
      best = std::move(run);
      sol.selected_start = s;
    }
  }
  sol.cost = best.cost;
  sol.converged = best.converged;

  Matrix C = (B_c * best.k).transpose();
  {
    // Rotating the rows within span(C) often leaves the cost unchanged (e.g.
    // when span(C) lies in null(N)); then prefer the most axis-aligned basis
    // so equivalent problems get the same directions.
    const Matrix span = linalg::RowSpaceBasis(C, config.rank_tol).basis;
    if (span.cols() == sol.n_av) {
      // Rows spanning the orthogonal complement, so null(complement) = span.
      const Matrix complement =
          linalg::NullSpaceBasis(span.transpose(), config.rank_tol)
              .basis.transpose();
      const Matrix axes =
          linalg::AxisAlignedNullSpaceBasis(complement, config.rank_tol).basis;
      if (axes.cols() == sol.n_av) {
        const Matrix k_axes = B_c.transpose() * axes;
        const double axes_cost = DirectionCost(k_axes, B_c, null_N);
        if (axes_cost <= sol.cost + 1e-12) {
          C = axes.transpose();
          sol.cost = axes_cost;
        }
      }
    }
  }
  Vector b_C = C * sol.v_star;
  // Each row's sign is free; orient rows so the commanded speed is >= 0.
  for (Eigen::Index i = 0; i < C.rows(); ++i) {
    bool flip = b_C(i) < 0.0;
    if (b_C(i) == 0.0) {
      for (Eigen::Index j = 0; j < C.cols(); ++j) {
        if (std::abs(C(i, j)) > 1e-12) {
          flip = C(i, j) < 0.0;
          break;
        }
      }
    }
    if (flip) {
      C.row(i) *= -1.0;
      b_C(i) = -b_C(i);
    }
  }
  sol.C = C;
  sol.b_C = b_C;

  const Matrix R_C = C.rightCols(n_a);
  const Matrix force_axes =
      linalg::AxisAlignedNullSpaceBasis(R_C, config.rank_tol).basis;
  if (force_axes.cols() != n_a - sol.n_av) {
    throw SolverError(ErrorCode::kSingularTransform,
                      "velocity-command rows are linearly dependent");
  }
  sol.R_a.resize(n_a, n_a);
  sol.R_a.topRows(n_a - sol.n_av) = force_axes.transpose();
  sol.R_a.bottomRows(sol.n_av) = R_C;
  sol.T = TransformFromActuatedBlock(n_u, sol.R_a);
  return sol;
}

}  // namespace hybrid_servo
