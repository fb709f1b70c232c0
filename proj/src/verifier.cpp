#include "hybrid_servo/verifier.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "hybrid_servo/errors.h"

namespace hybrid_servo::verify {

namespace {

constexpr double kVelocityTol = 1e-6;
constexpr double kNewtonTol = 1e-6;
constexpr double kUnactuatedTol = 1e-8;
constexpr double kMarginTol = -1e-8;

Matrix NOrEmpty(const SystemInstance& inst) {
  return inst.N.rows() == 0 ? Matrix::Zero(0, inst.n()) : inst.N;
}

double MaxAbs(const Matrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

Vector ZeroPrefixed(Eigen::Index zeros, const Vector& tail) {
  Vector out = Vector::Zero(zeros + tail.size());
  out.tail(tail.size()) = tail;
  return out;
}

}  // namespace

VelocityCheck CheckVelocitySolution(const SystemInstance& inst, const Matrix& C,
                                    const Vector& b_C, double rel_tol) {
  VelocityCheck out;
  const Matrix N = NOrEmpty(inst);
  const Matrix NC = linalg::StackRows(N, C.rows() == 0 ? Matrix::Zero(0, inst.n()) : C);
  const Matrix NG = linalg::StackRows(N, inst.G);
  out.rank_NC = linalg::NumericalRank(NC, rel_tol);
  out.rank_NG = linalg::NumericalRank(NG, rel_tol);
  if (C.rows() == 0) out.notes.push_back("n_av = 0: goal is implied by the constraints");
  if (out.rank_NC != out.rank_NG) {
    out.notes.push_back("rank([N;C]) = " + std::to_string(out.rank_NC) +
                        " but rank([N;G]) = " + std::to_string(out.rank_NG));
  }

  const Matrix null_NC = linalg::NullSpaceBasis(NC, rel_tol).basis;
  const Matrix null_NG = linalg::NullSpaceBasis(NG, rel_tol).basis;
  out.null_residual = MaxAbs(inst.G * null_NC);
  out.reverse_null_residual = C.rows() == 0 ? 0.0 : MaxAbs(C * null_NG);

  const double scale = 1.0 + inst.b_G.norm();
  bool particular_ok = true;
  Vector v_G;
  try {
    v_G = linalg::MinNormSolution(NG, ZeroPrefixed(N.rows(), inst.b_G), rel_tol);
    out.command_residual = C.rows() == 0 ? 0.0 : (C * v_G - b_C).norm();
  } catch (const SolverError&) {
    particular_ok = false;
    out.notes.push_back("goal system is inconsistent");
  }
  try {
    const Vector v_C =
        linalg::MinNormSolution(NC, ZeroPrefixed(N.rows(), b_C), rel_tol);
    out.goal_residual = (inst.G * v_C - inst.b_G).norm();
  } catch (const SolverError&) {
    particular_ok = false;
    out.notes.push_back("command system is inconsistent");
  }

  if (particular_ok && C.rows() > 0) {
    std::mt19937_64 rng(0x5eed);
    std::normal_distribution<double> normal(0.0, 1.0);
    double worst = 0.0;
    for (int s = 0; s < kNullSamples; ++s) {
      Vector alpha(null_NG.cols());
      for (Eigen::Index i = 0; i < alpha.size(); ++i) alpha(i) = normal(rng);
      const Vector v = v_G + null_NG * alpha;
      worst = std::max(worst, (C * v - b_C).norm());
    }
    out.command_consistency = worst;
  }

  out.pass = particular_ok && out.rank_NC == out.rank_NG &&
             out.null_residual <= kVelocityTol &&
             out.reverse_null_residual <= kVelocityTol &&
             out.goal_residual <= kVelocityTol * scale &&
             out.command_residual <= kVelocityTol * scale &&
             out.command_consistency <= kVelocityTol * scale;
  return out;
}

VelocityCheck CheckVelocitySolution(const SystemInstance& inst,
                                    const VelocitySolution& sol,
                                    double rel_tol) {
  return CheckVelocitySolution(inst, sol.C, sol.b_C, rel_tol);
}

ForceCheck CheckForceSolution(const SystemInstance& inst,
                              const GuardConditions& guard, const Matrix& T,
                              const Vector& lambda, const Vector& eta) {
  ForceCheck out;
  const int n = inst.n();
  const int n_phi = inst.n_phi();
  const Vector f = T.fullPivLu().solve(eta);

  // Balance in the action frame: T (Omega^T J^T lambda + f + F).
  Vector generalized_reaction = Vector::Zero(n);
  if (n_phi > 0) {
    if (inst.J_phi && inst.Omega) {
      generalized_reaction = inst.Omega->transpose() * (inst.J_phi->transpose() * lambda);
    } else {
      generalized_reaction = inst.N.transpose() * lambda;
    }
  }
  const Vector TF = T * inst.F;
  out.newton_residual = (T * generalized_reaction + eta + TF).norm();
  out.unactuated_residual = inst.n_u > 0 ? f.head(inst.n_u).norm() : 0.0;

  Vector stacked(n_phi + n);
  stacked << lambda, f;
  if (guard.Gamma.rows() > 0) {
    out.gamma_residual = (guard.Gamma * stacked - guard.b_Gamma).norm();
  }
  if (guard.Lambda.rows() > 0) {
    out.guard_margins = guard.b_Lambda - guard.Lambda * stacked;
    out.min_guard_margin = out.guard_margins.minCoeff();
  } else {
    out.guard_margins = Vector::Zero(0);
    out.min_guard_margin = std::numeric_limits<double>::infinity();
    out.notes.push_back("no guard rows");
  }

  const bool newton_ok = out.newton_residual <= kNewtonTol * (1.0 + TF.norm());
  const bool unactuated_ok = out.unactuated_residual <= kUnactuatedTol;
  const bool gamma_ok = out.gamma_residual <= kNewtonTol * (1.0 + guard.b_Gamma.norm());
  const bool margins_ok = out.guard_margins.size() == 0 || out.min_guard_margin >= kMarginTol;
  if (!newton_ok) out.notes.push_back("Newton residual too large");
  if (!unactuated_ok) out.notes.push_back("unactuated force is not zero");
  if (!gamma_ok) out.notes.push_back("Gamma equalities violated");
  if (!margins_ok) out.notes.push_back("guard condition violated");
  out.pass = newton_ok && unactuated_ok && gamma_ok && margins_ok;
  return out;
}

ForceCheck CheckForceSolution(const SystemInstance& inst,
                              const GuardConditions& guard, const Matrix& T,
                              const ForceSolution& sol) {
  return CheckForceSolution(inst, guard, T, sol.lambda, sol.eta);
}

EquilibriumOracle::EquilibriumOracle(const SystemInstance& inst,
                                     const GuardConditions& guard,
                                     const Matrix& T, int n_av)
    : n_phi_(inst.n_phi()),
      n_u_(inst.n_u),
      n_af_(inst.n_a - n_av),
      n_av_(n_av),
      Lambda_(guard.Lambda),
      b_Lambda_(guard.b_Lambda) {
  const int n = inst.n();
  const int n_gamma = static_cast<int>(guard.Gamma.rows());
  T_inv_ = T.fullPivLu().inverse();

  // Unknowns ordered [lambda; eta_u; eta_av | eta_af]; rows: f_u = 0,
  // T (N^T lambda + F) + eta = 0, Gamma rows.
  const int m_f = n_phi_ + n_u_ + n_av_;
  const int m_r = n_u_ + n + n_gamma;
  Matrix rows_lambda = Matrix::Zero(m_r, n_phi_);
  Matrix rows_eta = Matrix::Zero(m_r, n);
  Vector rhs = Vector::Zero(m_r);
  rows_eta.topRows(n_u_) = T_inv_.topRows(n_u_);
  if (n_phi_ > 0) rows_lambda.middleRows(n_u_, n) = T * inst.N.transpose();
  rows_eta.middleRows(n_u_, n) = Matrix::Identity(n, n);
  rhs.segment(n_u_, n) = -(T * inst.F);
  if (n_gamma > 0) {
    rows_lambda.bottomRows(n_gamma) = guard.Gamma.leftCols(n_phi_);
    rows_eta.bottomRows(n_gamma) = guard.Gamma.rightCols(n) * T_inv_;
    rhs.tail(n_gamma) = guard.b_Gamma;
  }

  Matrix M_free(m_r, m_f);
  M_free << rows_lambda, rows_eta.leftCols(n_u_), rows_eta.rightCols(n_av_);
  const Matrix M_cmd = rows_eta.middleCols(n_u_, n_af_);

  // Stationarity and feasibility of min ||x||^2 s.t. M_free x = rhs - M_cmd e.
  Matrix K = Matrix::Zero(m_f + m_r, m_f + m_r);
  K.topLeftCorner(m_f, m_f) = 2.0 * Matrix::Identity(m_f, m_f);
  K.topRightCorner(m_f, m_r) = M_free.transpose();
  K.bottomLeftCorner(m_r, m_f) = M_free;
  Eigen::FullPivLU<Matrix> lu(K);
  if (K.rows() > 0 && !lu.isInvertible()) {
    throw SolverError(ErrorCode::kSingularSystem,
                      "equilibrium oracle: KKT matrix is singular");
  }
  Matrix rhs_block = Matrix::Zero(m_f + m_r, 1 + n_af_);
  rhs_block.col(0).tail(m_r) = rhs;
  rhs_block.rightCols(n_af_).bottomRows(m_r) = -M_cmd;
  const Matrix sol = K.rows() > 0 ? Matrix(lu.solve(rhs_block))
                                  : Matrix::Zero(0, 1 + n_af_);

  // Scatter into [lambda; eta].
  base_ = Vector::Zero(n_phi_ + n);
  map_ = Matrix::Zero(n_phi_ + n, n_af_);
  for (int i = 0; i < n_phi_ + n_u_; ++i) {
    base_(i) = sol(i, 0);
    map_.row(i) = sol.row(i).tail(n_af_);
  }
  for (int i = 0; i < n_av_; ++i) {
    const int dst = n_phi_ + n_u_ + n_af_ + i;
    const int src = n_phi_ + n_u_ + i;
    base_(dst) = sol(src, 0);
    map_.row(dst) = sol.row(src).tail(n_af_);
  }
  for (int i = 0; i < n_af_; ++i) map_(n_phi_ + n_u_ + i, i) = 1.0;
}

Equilibrium EquilibriumOracle::Solve(const Vector& eta_af) const {
  const Vector x = base_ + map_ * eta_af;
  return {x.head(n_phi_), x.tail(x.size() - n_phi_)};
}

Vector EquilibriumOracle::GuardMargins(const Vector& eta_af) const {
  if (Lambda_.rows() == 0) return Vector::Zero(0);
  const Equilibrium eq = Solve(eta_af);
  Vector stacked(eq.lambda.size() + eq.eta.size());
  stacked << eq.lambda, T_inv_ * eq.eta;
  return b_Lambda_ - Lambda_ * stacked;
}

double EquilibriumOracle::Margin(const Vector& eta_af, double f_max) const {
  double margin = f_max;
  const Vector g = GuardMargins(eta_af);
  if (g.size() > 0) margin = std::min(margin, g.minCoeff());
  for (Eigen::Index i = 0; i < eta_af.size(); ++i) {
    margin = std::min(margin, f_max - std::abs(eta_af(i)));
  }
  return margin;
}

OracleResult BruteForceForceOracle(const SystemInstance& inst,
                                   const GuardConditions& guard,
                                   const Matrix& T, int n_av, double f_max,
                                   double grid_resolution) {
  const int n_af = inst.n_a - n_av;
  if (n_af > 3) {
    throw SolverError(ErrorCode::kInvalidArgument,
                      "grid oracle supports at most 3 force axes");
  }
  if (!(grid_resolution > 0.0) || !(f_max > 0.0)) {
    throw SolverError(ErrorCode::kInvalidArgument,
                      "grid resolution and f_max must be positive");
  }
  const EquilibriumOracle oracle(inst, guard, T, n_av);
  const long per_axis = static_cast<long>(std::floor(2.0 * f_max / grid_resolution + 1e-9)) + 1;
  long total = 1;
  for (int i = 0; i < n_af; ++i) total *= per_axis;

  OracleResult out;
  out.best_margin = -std::numeric_limits<double>::infinity();
  Vector eta(n_af);
  for (long idx = 0; idx < total; ++idx) {
    long rest = idx;
    for (int i = 0; i < n_af; ++i) {
      eta(i) = -f_max + grid_resolution * static_cast<double>(rest % per_axis);
      rest /= per_axis;
    }
    const double m = oracle.Margin(eta, f_max);
    if (m > out.best_margin) {
      out.best_margin = m;
      out.best_eta_af = eta;
    }
  }
  out.points = total;
  return out;
}

}  // namespace hybrid_servo::verify
