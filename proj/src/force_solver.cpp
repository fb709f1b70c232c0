#include "hybrid_servo/force_solver.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "hybrid_servo/errors.h"
#include "hybrid_servo/linear_program.h"

namespace hybrid_servo {

namespace {

constexpr double kInfeasibleMargin = -1e-8;
constexpr double kBlockingDual = 1e-9;
constexpr double kFixSlack = 1e-9;

Matrix InvertTransform(const Matrix& T, int n_u) {
  const Eigen::Index n = T.rows();
  if (T.cols() != n || n_u > n) {
    throw SolverError(ErrorCode::kDimensionMismatch, "T must be n x n");
  }
  const Eigen::Index n_a = n - n_u;
  Matrix T_inv = Matrix::Identity(n, n);
  if (n_a == 0) return T_inv;
  const Matrix R_a = T.bottomRightCorner(n_a, n_a);
  Eigen::JacobiSVD<Matrix> svd(R_a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (!(sv(n_a - 1) > 1e-8 * std::max(1.0, sv(0)))) {
    throw SolverError(ErrorCode::kSingularTransform,
                      "actuated block of T is not invertible");
  }
  T_inv.bottomRightCorner(n_a, n_a) =
      svd.matrixV() * sv.cwiseInverse().asDiagonal() * svd.matrixU().transpose();
  return T_inv;
}

// Column indices of f_free within [lambda; eta].
std::vector<int> FreeColumns(int n_phi, int n_u, int n_af, int n_av) {
  std::vector<int> cols;
  for (int i = 0; i < n_phi + n_u; ++i) cols.push_back(i);
  for (int i = 0; i < n_av; ++i) cols.push_back(n_phi + n_u + n_af + i);
  return cols;
}

Matrix SelectColumns(const Matrix& m, const std::vector<int>& cols) {
  Matrix out(m.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = m.col(cols[j]);
  return out;
}

}  // namespace

NewtonAssembly AssembleNewton(const SystemInstance& instance,
                              const GuardConditions& guard, const Matrix& T,
                              int n_av) {
  const int n = instance.n();
  const int n_u = instance.n_u;
  const int n_phi = instance.n_phi();
  const int n_af = instance.n_a - n_av;
  if (n_av < 0 || n_af < 0 || T.rows() != n) {
    throw SolverError(ErrorCode::kDimensionMismatch,
                      "n_av must lie in [0, n_a] and T must be n x n");
  }
  NewtonAssembly a;
  a.n_phi = n_phi;
  a.n_u = n_u;
  a.n_af = n_af;
  a.n_av = n_av;
  a.T_inv = InvertTransform(T, n_u);

  const Eigen::Index n_gamma = guard.Gamma.rows();
  const Eigen::Index rows = n_u + n + n_gamma;
  Matrix full = Matrix::Zero(rows, n_phi + n);
  Vector rhs = Vector::Zero(rows);

  // f_u = H T^{-1} eta = 0
  full.block(0, n_phi, n_u, n) = UnactuatedSelector(n_u, instance.n_a) * a.T_inv;
  // T N^T lambda + eta = -T F
  if (n_phi > 0) full.block(n_u, 0, n, n_phi) = T * instance.N.transpose();
  full.block(n_u, n_phi, n, n).setIdentity();
  rhs.segment(n_u, n) = -T * instance.F;
  // Gamma_lambda lambda + Gamma_f T^{-1} eta = b_Gamma
  if (n_gamma > 0) {
    full.block(n_u + n, 0, n_gamma, n_phi) = guard.Gamma.leftCols(n_phi);
    full.block(n_u + n, n_phi, n_gamma, n) = guard.Gamma.rightCols(n) * a.T_inv;
    rhs.tail(n_gamma) = guard.b_Gamma;
  }

  const std::vector<int> free_cols = FreeColumns(n_phi, n_u, n_af, n_av);
  std::vector<int> eta_f_cols;
  for (int i = 0; i < n_af; ++i) eta_f_cols.push_back(n_phi + n_u + i);
  a.M_free = SelectColumns(full, free_cols);
  a.M_eta_f = SelectColumns(full, eta_f_cols);
  a.rhs = rhs;

  Matrix guard_full(guard.Lambda.rows(), n_phi + n);
  if (guard.Lambda.rows() > 0) {
    guard_full.leftCols(n_phi) = guard.Lambda.leftCols(n_phi);
    guard_full.rightCols(n) = guard.Lambda.rightCols(n) * a.T_inv;
  }
  a.guard_free = SelectColumns(guard_full, free_cols);
  a.guard_eta_f = SelectColumns(guard_full, eta_f_cols);
  a.b_Lambda = guard.b_Lambda;

  for (int i = 0; i < n_phi; ++i) a.free_force_layout.push_back("lambda[" + std::to_string(i) + "]");
  for (int i = 0; i < n_u; ++i) a.free_force_layout.push_back("eta_u[" + std::to_string(i) + "]");
  for (int i = 0; i < n_av; ++i) a.free_force_layout.push_back("eta_av[" + std::to_string(i) + "]");
  return a;
}

KktSystem BuildKkt(const NewtonAssembly& a) {
  const Eigen::Index m_f = a.M_free.cols();
  const Eigen::Index m_r = a.M_free.rows();
  KktSystem kkt;
  kkt.num_free = static_cast<int>(m_f);
  kkt.K = Matrix::Zero(m_f + m_r, m_f + m_r);
  kkt.K.topLeftCorner(m_f, m_f) = 2.0 * Matrix::Identity(m_f, m_f);
  kkt.K.topRightCorner(m_f, m_r) = a.M_free.transpose();
  kkt.K.bottomLeftCorner(m_r, m_f) = a.M_free;
  kkt.rhs_const = Vector::Zero(m_f + m_r);
  kkt.rhs_const.tail(m_r) = a.rhs;
  kkt.rhs_eta_map = Matrix::Zero(m_f + m_r, a.n_af);
  kkt.rhs_eta_map.bottomRows(m_r) = -a.M_eta_f;
  return kkt;
}

KktSolution SolveKkt(const KktSystem& kkt, const Vector& eta_af) {
  const Vector rhs = kkt.rhs_const + kkt.rhs_eta_map * eta_af;
  const Vector sol = linalg::SolveSquare(kkt.K, rhs);
  return {sol.head(kkt.num_free), sol.tail(sol.size() - kkt.num_free)};
}

ForceSolution MaximizeGuardMargin(const SystemInstance& instance,
                                  const GuardConditions& guard,
                                  const Matrix& T, int n_av,
                                  const ForceSolverConfig& config) {
  if (!(config.f_max > 0.0)) {
    throw SolverError(ErrorCode::kInvalidArgument, "f_max must be positive");
  }
  const NewtonAssembly a = AssembleNewton(instance, guard, T, n_av);
  const KktSystem kkt = BuildKkt(a);
  const Eigen::Index m_f = a.M_free.cols();
  const Eigen::Index m_r = a.M_free.rows();
  const Eigen::Index n_af = a.n_af;
  const Eigen::Index n_guard = a.b_Lambda.size();

  // The minimum-norm free forces are affine in the command:
  // [f_free; f_dual] = base + map * eta_af. Substituting them leaves an LP over
  // [eta_af, s] alone with the same optimum.
  Vector kkt_base = Vector::Zero(m_f + m_r);
  Matrix kkt_map = Matrix::Zero(m_f + m_r, n_af);
  // Rows of the balance that no free force can absorb become equalities on
  // the command: E eta_af = e.
  Matrix cmd_eq = Matrix::Zero(0, n_af);
  Vector cmd_eq_rhs = Vector::Zero(0);
  const bool full_row_rank =
      m_r == 0 || (m_f > 0 && linalg::NumericalRank(a.M_free) == m_r);
  if (full_row_rank) {
    if (kkt.K.rows() > 0) {
      Eigen::PartialPivLU<Matrix> lu(kkt.K);
      if (!(lu.rcond() > 1e-12)) {
        throw SolverError(ErrorCode::kSingularSystem,
                          "free-force KKT system is numerically singular");
      }
      kkt_base = lu.solve(kkt.rhs_const);
      if (n_af > 0) kkt_map = lu.solve(kkt.rhs_eta_map);
    }
  } else {
    // Dependent balance rows: K is singular but the minimum-norm free forces
    // are still unique whenever the balance is solvable.
    Matrix pinv = Matrix::Zero(m_f, m_r);
    if (m_f > 0) pinv = a.M_free.completeOrthogonalDecomposition().pseudoInverse();
    kkt_base.head(m_f) = pinv * a.rhs;
    kkt_map.topRows(m_f) = -pinv * a.M_eta_f;
    // Minimum-norm multipliers of 2 f + M_free^T mu = 0.
    kkt_base.tail(m_r) = -2.0 * pinv.transpose() * kkt_base.head(m_f);
    kkt_map.bottomRows(m_r) = -2.0 * pinv.transpose() * kkt_map.topRows(m_f);

    const Matrix left_null = linalg::NullSpaceBasis(a.M_free.transpose()).basis;
    const Matrix eq_all = left_null.transpose() * a.M_eta_f;
    const Vector eq_rhs_all = left_null.transpose() * a.rhs;
    // Directions the command cannot influence must already hold.
    const double scale = 1.0 + a.rhs.norm();
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < eq_all.rows(); ++i) {
      if (eq_all.row(i).norm() > 1e-10 * scale) {
        keep.push_back(i);
      } else if (std::abs(eq_rhs_all(i)) > 1e-8 * scale) {
        throw SolverError(ErrorCode::kSingularSystem,
                          "no force command balances the system (M_free rank "
                          "deficient and the balance is inconsistent)");
      }
    }
    cmd_eq.resize(static_cast<Eigen::Index>(keep.size()), n_af);
    cmd_eq_rhs.resize(static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) {
      cmd_eq.row(static_cast<Eigen::Index>(k)) = eq_all.row(keep[k]);
      cmd_eq_rhs(static_cast<Eigen::Index>(k)) = eq_rhs_all(keep[k]);
    }
  }

  const Eigen::Index n_var = n_af + 1;
  const Eigen::Index s_col = n_var - 1;
  lp::LinearProgram base;
  base.c = Vector::Zero(n_var);
  base.A_eq = Matrix::Zero(cmd_eq.rows(), n_var);
  base.A_eq.leftCols(n_af) = cmd_eq;
  base.b_eq = cmd_eq_rhs;
  base.lower = Vector::Constant(n_var, -lp::kInf);
  base.upper = Vector::Constant(n_var, lp::kInf);
  base.lower.head(n_af).setConstant(-config.f_max);
  base.upper.head(n_af).setConstant(config.f_max);
  base.upper(s_col) = config.f_max;

  // Margin rows r: row_r . eta_af <= bound_r; the margin is
  // bound_r - row_r . eta_af.
  const Eigen::Index n_rows = n_guard + 2 * n_af;
  Matrix margin_rows = Matrix::Zero(n_rows, n_af);
  Vector margin_bounds(n_rows);
  if (n_guard > 0) {
    const Matrix guard_on_free = a.guard_free;
    margin_rows.topRows(n_guard) =
        guard_on_free * kkt_map.topRows(m_f) + a.guard_eta_f;
    margin_bounds.head(n_guard) = a.b_Lambda - guard_on_free * kkt_base.head(m_f);
  }
  for (Eigen::Index i = 0; i < n_af; ++i) {
    margin_rows(n_guard + 2 * i, i) = 1.0;
    margin_rows(n_guard + 2 * i + 1, i) = -1.0;
    margin_bounds(n_guard + 2 * i) = config.f_max;
    margin_bounds(n_guard + 2 * i + 1) = config.f_max;
  }

  std::vector<bool> fixed(static_cast<std::size_t>(n_rows), false);
  Vector fixed_level = Vector::Zero(n_rows);
  ForceSolution out;
  Vector x;
  bool first = true;

  while (true) {
    std::vector<Eigen::Index> active;
    for (Eigen::Index r = 0; r < n_rows; ++r) {
      if (!fixed[static_cast<std::size_t>(r)]) active.push_back(r);
    }
    lp::LinearProgram prob = base;
    prob.c(s_col) = -1.0;
    prob.A_ub = Matrix::Zero(n_rows, n_var);
    prob.b_ub = Vector::Zero(n_rows);
    for (Eigen::Index r = 0; r < n_rows; ++r) {
      prob.A_ub.row(r).head(n_af) = margin_rows.row(r);
      if (fixed[static_cast<std::size_t>(r)]) {
        prob.b_ub(r) = margin_bounds(r) - fixed_level(r) + kFixSlack;
      } else {
        prob.A_ub(r, s_col) = 1.0;
        prob.b_ub(r) = margin_bounds(r);
      }
    }
    if (!first) {
      // Later rounds keep the first-round optimum as a floor for s.
      prob.lower(s_col) = out.objective_margin - kFixSlack;
    }
    const lp::Result res = lp::Solve(prob);
    ++out.lp_solves;
    if (res.status != lp::Status::kOptimal) {
      if (first) {
        throw SolverError(ErrorCode::kInfeasibleLP,
                          "force LP could not be solved");
      }
      break;
    }
    x = res.x;
    const double s = res.x(s_col);
    if (first) {
      out.objective_margin = s;
      first = false;
    }
    if (!config.lexicographic || active.empty()) break;

    bool any_fixed = false;
    for (Eigen::Index r : active) {
      if (res.ub_duals(r) < -kBlockingDual) {
        fixed[static_cast<std::size_t>(r)] = true;
        fixed_level(r) = s;
        any_fixed = true;
      }
    }
    if (!any_fixed) break;
    bool remaining = false;
    for (Eigen::Index r : active) remaining |= !fixed[static_cast<std::size_t>(r)];
    if (!remaining) break;
  }

  out.eta_af = x.head(n_af);
  const Vector free_all = kkt_base + kkt_map * out.eta_af;
  out.f_free = free_all.head(m_f);
  out.f_free_dual = free_all.tail(m_r);

  const int n = instance.n();
  const int n_phi = a.n_phi;
  out.lambda = out.f_free.head(n_phi);
  out.eta = Vector::Zero(n);
  out.eta.head(a.n_u) = out.f_free.segment(n_phi, a.n_u);
  out.eta.segment(a.n_u, n_af) = out.eta_af;
  out.eta.tail(n_av) = out.f_free.tail(n_av);

  if (n_guard > 0) {
    Vector stacked(n_phi + n);
    stacked << out.lambda, a.T_inv * out.eta;
    out.guard_margins = guard.b_Lambda - guard.Lambda * stacked;
  } else {
    out.guard_margins = Vector::Zero(0);
  }
  return out;
}

ForceSolution SolveForce(const SystemInstance& instance,
                         const GuardConditions& guard, const Matrix& T,
                         int n_av, const ForceSolverConfig& config) {
  ForceSolution sol = MaximizeGuardMargin(instance, guard, T, n_av, config);
  if (sol.objective_margin < kInfeasibleMargin) {
    throw SolverError(ErrorCode::kInfeasibleLP,
                      "best guard margin " +
                          std::to_string(sol.objective_margin) + " < 0");
  }
  return sol;
}

}  // namespace hybrid_servo
