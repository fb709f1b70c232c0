#include "hybrid_servo/linear_program.h"

#include <cmath>
#include <vector>

#include "hybrid_servo/errors.h"

namespace hybrid_servo::lp {

namespace {

// Standard form: minimize c^T y, A y = b, y >= 0, b >= 0.
struct StandardForm {
  Matrix A;
  Vector b;
  Vector c;
  // x = offset + map * y_structural
  Vector offset;
  Matrix map;
  int num_structural = 0;
  std::vector<double> row_sign;  // +1/-1 for rows flipped to make b >= 0
  int num_eq = 0;
  int num_ub = 0;
};

StandardForm ToStandardForm(const LinearProgram& p) {
  const Eigen::Index n = p.c.size();
  std::vector<std::pair<Eigen::Index, double>> columns;  // (x index, sign)
  Vector offset = Vector::Zero(n);
  std::vector<std::pair<int, double>> extra_upper;  // (structural col, bound)

  for (Eigen::Index j = 0; j < n; ++j) {
    const double lo = p.lower(j);
    const double hi = p.upper(j);
    if (std::isfinite(lo)) {
      offset(j) = lo;
      columns.push_back({j, 1.0});
      if (std::isfinite(hi)) {
        extra_upper.push_back({static_cast<int>(columns.size()) - 1, hi - lo});
      }
    } else if (std::isfinite(hi)) {
      offset(j) = hi;
      columns.push_back({j, -1.0});
    } else {
      columns.push_back({j, 1.0});
      columns.push_back({j, -1.0});
    }
  }

  StandardForm sf;
  sf.num_structural = static_cast<int>(columns.size());
  sf.map = Matrix::Zero(n, sf.num_structural);
  for (int k = 0; k < sf.num_structural; ++k) {
    sf.map(columns[k].first, k) = columns[k].second;
  }
  sf.offset = offset;

  const Eigen::Index m_eq = p.A_eq.rows();
  const Eigen::Index m_ub = p.A_ub.rows() + static_cast<Eigen::Index>(extra_upper.size());
  sf.num_eq = static_cast<int>(m_eq);
  sf.num_ub = static_cast<int>(m_ub);
  const Eigen::Index m = m_eq + m_ub;
  const Eigen::Index cols = sf.num_structural + m_ub;

  sf.A = Matrix::Zero(m, cols);
  sf.b = Vector::Zero(m);
  if (m_eq > 0) {
    sf.A.topLeftCorner(m_eq, sf.num_structural) = p.A_eq * sf.map;
    sf.b.head(m_eq) = p.b_eq - p.A_eq * offset;
  }
  const Eigen::Index m_ub_user = p.A_ub.rows();
  if (m_ub_user > 0) {
    sf.A.block(m_eq, 0, m_ub_user, sf.num_structural) = p.A_ub * sf.map;
    sf.b.segment(m_eq, m_ub_user) = p.b_ub - p.A_ub * offset;
  }
  for (std::size_t k = 0; k < extra_upper.size(); ++k) {
    const Eigen::Index row = m_eq + m_ub_user + static_cast<Eigen::Index>(k);
    sf.A(row, extra_upper[k].first) = 1.0;
    sf.b(row) = extra_upper[k].second;
  }
  for (Eigen::Index r = 0; r < m_ub; ++r) {
    sf.A(m_eq + r, sf.num_structural + r) = 1.0;
  }
  sf.row_sign.assign(static_cast<std::size_t>(m), 1.0);
  for (Eigen::Index r = 0; r < m; ++r) {
    if (sf.b(r) < 0.0) {
      sf.A.row(r) *= -1.0;
      sf.b(r) = -sf.b(r);
      sf.row_sign[static_cast<std::size_t>(r)] = -1.0;
    }
  }
  sf.c = Vector::Zero(cols);
  sf.c.head(sf.num_structural) = sf.map.transpose() * p.c;
  return sf;
}

constexpr int kRefactorInterval = 25;

// Dense tableau over the columns [structural+slack | artificial].
class Tableau {
 public:
  Tableau(const Matrix& A, const Vector& b, const Options& options)
      : options_(options), A_(A), b_(b) {
    m_ = A.rows();
    n_ = A.cols();
    // Columns: original n_, artificial m_, rhs.
    t_ = Matrix::Zero(m_, n_ + m_ + 1);
    t_.leftCols(n_) = A;
    t_.block(0, n_, m_, m_).setIdentity();
    t_.col(n_ + m_) = b;
    basis_.resize(static_cast<std::size_t>(m_));
    for (Eigen::Index i = 0; i < m_; ++i) basis_[i] = static_cast<int>(n_ + i);
  }

  // Re-initialize the tableau from the original data for the given basis;
  // columns >= n_ are artificials.
  bool Refactor(const std::vector<int>& basis) {
    Matrix B = Matrix::Zero(m_, m_);
    for (Eigen::Index i = 0; i < m_; ++i) {
      const int j = basis[static_cast<std::size_t>(i)];
      if (j < n_) {
        B.col(i) = A_.col(j);
      } else {
        B(j - n_, i) = 1.0;
      }
    }
    Eigen::FullPivLU<Matrix> lu(B);
    if (!lu.isInvertible()) return false;
    t_.leftCols(n_) = lu.solve(A_);
    t_.block(0, n_, m_, m_) = lu.inverse();
    t_.col(n_ + m_) = lu.solve(b_);
    basis_ = basis;
    return true;
  }

  // Runs the simplex with cost vector over all columns (size n_ + m_).
  // allowed[j] == false keeps column j out of the basis.
  Status Optimize(const Vector& cost, const std::vector<bool>& allowed,
                  int& pivots) {
    int degenerate_run = 0;
    int since_refactor = 0;
    bool bland = false;
    while (true) {
      if (pivots >= options_.max_pivots) return Status::kIterationLimit;
      Vector duals(m_);
      for (Eigen::Index i = 0; i < m_; ++i) duals(i) = cost(basis_[i]);
      // reduced cost d_j = c_j - c_B^T t_j
      int entering = -1;
      double best = -options_.optimality_tol;
      for (Eigen::Index j = 0; j < n_ + m_; ++j) {
        if (!allowed[static_cast<std::size_t>(j)] || IsBasic(static_cast<int>(j))) continue;
        const double d = cost(j) - duals.dot(t_.col(j).head(m_));
        if (d < best) {
          entering = static_cast<int>(j);
          if (bland) break;
          best = d;
        }
      }
      if (entering < 0) return Status::kOptimal;

      // Two-pass (Harris) ratio test: find the bound on the step with the
      // right-hand side relaxed by the feasibility tolerance, then pick the
      // largest pivot among the rows that attain it.
      const double rhs_tol = options_.feasibility_tol;
      double bound = kInf;
      for (Eigen::Index i = 0; i < m_; ++i) {
        const double a = t_(i, entering);
        if (a > options_.pivot_tol) {
          bound = std::min(bound, (std::max(t_(i, n_ + m_), 0.0) + rhs_tol) / a);
        }
      }
      int leaving_row = -1;
      double best_pivot = 0.0;
      double best_ratio = kInf;
      for (Eigen::Index i = 0; i < m_; ++i) {
        const double a = t_(i, entering);
        if (a > options_.pivot_tol) {
          const double ratio = std::max(t_(i, n_ + m_), 0.0) / a;
          if (ratio <= bound &&
              (a > best_pivot || (bland && a == best_pivot &&
                                  basis_[i] < basis_[leaving_row]))) {
            best_pivot = a;
            best_ratio = ratio;
            leaving_row = static_cast<int>(i);
          }
        }
      }
      if (leaving_row < 0) return Status::kUnbounded;
      if (best_ratio <= 1e-14) {
        if (++degenerate_run > 50) bland = true;
      } else {
        degenerate_run = 0;
      }
      Pivot(leaving_row, entering);
      ++pivots;
      if (++since_refactor >= kRefactorInterval) {
        Refactor(basis_);
        since_refactor = 0;
      }
    }
  }

  void Pivot(int row, int col) {
    t_.row(row) /= t_(row, col);
    for (Eigen::Index i = 0; i < m_; ++i) {
      if (i == row) continue;
      const double f = t_(i, col);
      if (f != 0.0) t_.row(i) -= f * t_.row(row);
    }
    basis_[static_cast<std::size_t>(row)] = col;
  }

  bool IsBasic(int j) const {
    for (int b : basis_) {
      if (b == j) return true;
    }
    return false;
  }

  // Pivot artificial variables out of the basis where possible. Rows that
  // cannot be cleared are redundant and stay with a zero-valued artificial.
  void DriveOutArtificials() {
    for (Eigen::Index i = 0; i < m_; ++i) {
      if (basis_[i] < n_) continue;
      int col = -1;
      double best = 1e-9;
      for (Eigen::Index j = 0; j < n_; ++j) {
        if (IsBasic(static_cast<int>(j))) continue;
        if (std::abs(t_(i, j)) > best) {
          best = std::abs(t_(i, j));
          col = static_cast<int>(j);
        }
      }
      if (col >= 0) Pivot(static_cast<int>(i), col);
    }
  }

  Vector Solution() const {
    Vector y = Vector::Zero(n_ + m_);
    for (Eigen::Index i = 0; i < m_; ++i) y(basis_[i]) = t_(i, n_ + m_);
    return y;
  }

  const std::vector<int>& basis() const { return basis_; }
  Eigen::Index rows() const { return m_; }
  Eigen::Index cols() const { return n_; }

 private:
  Options options_;
  Matrix A_;
  Vector b_;
  Eigen::Index m_ = 0;
  Eigen::Index n_ = 0;
  Matrix t_;
  std::vector<int> basis_;
};

}  // namespace

Result Solve(const LinearProgram& p, const Options& options) {
  const Eigen::Index n = p.c.size();
  const bool shapes_ok =
      p.lower.size() == n && p.upper.size() == n &&
      (p.A_eq.rows() == 0 || p.A_eq.cols() == n) &&
      (p.A_ub.rows() == 0 || p.A_ub.cols() == n) &&
      p.b_eq.size() == p.A_eq.rows() && p.b_ub.size() == p.A_ub.rows();
  if (!shapes_ok) {
    throw SolverError(ErrorCode::kDimensionMismatch, "malformed linear program");
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    if (p.lower(j) > p.upper(j)) {
      Result r;
      r.status = Status::kInfeasible;
      return r;
    }
  }

  const StandardForm sf = ToStandardForm(p);
  const Eigen::Index m = sf.A.rows();
  const Eigen::Index cols = sf.A.cols();

  Result result;
  Tableau tab(sf.A, sf.b, options);
  std::vector<bool> allowed(static_cast<std::size_t>(cols + m), true);

  // Phase 1: minimize the sum of artificials.
  Vector phase1 = Vector::Zero(cols + m);
  phase1.tail(m).setOnes();
  Status s1 = tab.Optimize(phase1, allowed, result.pivots);
  // Confirm the phase-1 optimum on a freshly factorized tableau.
  if (s1 == Status::kOptimal && tab.Refactor(tab.basis())) {
    s1 = tab.Optimize(phase1, allowed, result.pivots);
  }
  if (s1 == Status::kIterationLimit) {
    result.status = s1;
    return result;
  }
  const Vector y1 = tab.Solution();
  const double infeasibility = y1.tail(m).sum();
  if (infeasibility > options.feasibility_tol * (1.0 + sf.b.lpNorm<Eigen::Infinity>())) {
    result.status = Status::kInfeasible;
    return result;
  }
  tab.DriveOutArtificials();

  // Phase 2 with artificials barred from entering.
  for (Eigen::Index j = cols; j < cols + m; ++j) allowed[static_cast<std::size_t>(j)] = false;
  Vector phase2 = Vector::Zero(cols + m);
  phase2.head(cols) = sf.c;
  Status s2 = tab.Optimize(phase2, allowed, result.pivots);

  // Refactorize the final basis from the original data and polish.
  bool any_artificial = false;
  for (int b : tab.basis()) any_artificial |= b >= cols;
  if (s2 == Status::kOptimal && !any_artificial) {
    for (int round = 0; round < 3; ++round) {
      const std::vector<int> basis = tab.basis();
      if (!tab.Refactor(basis)) break;
      const Vector y = tab.Solution();
      if (y.head(cols).minCoeff() >= -options.feasibility_tol) {
        s2 = tab.Optimize(phase2, allowed, result.pivots);
        if (tab.basis() == basis) break;
      } else {
        break;
      }
    }
  }
  result.status = s2;
  if (s2 != Status::kOptimal) return result;

  const Vector y = tab.Solution();
  const Vector y_struct = y.head(sf.num_structural).cwiseMax(0.0);
  result.x = sf.offset + sf.map * y_struct;
  result.objective = p.c.dot(result.x);

  // Duals from the final basis: B^T pi = c_B.
  Matrix B(m, m);
  Vector c_B(m);
  bool basis_ok = true;
  for (Eigen::Index i = 0; i < m; ++i) {
    const int j = tab.basis()[static_cast<std::size_t>(i)];
    if (j >= cols) {
      B.col(i).setZero();
      B(i, i) = 1.0;
      c_B(i) = 0.0;
      basis_ok = false;
      continue;
    }
    B.col(i) = sf.A.col(j);
    c_B(i) = sf.c(j);
  }
  Vector pi = Vector::Zero(m);
  if (m > 0) {
    Eigen::FullPivLU<Matrix> lu(B.transpose());
    if (lu.isInvertible()) pi = lu.solve(c_B);
  }
  (void)basis_ok;
  for (Eigen::Index r = 0; r < m; ++r) pi(r) *= sf.row_sign[static_cast<std::size_t>(r)];
  result.eq_duals = pi.head(sf.num_eq);
  result.ub_duals = pi.segment(sf.num_eq, p.A_ub.rows());
  return result;
}

}  // namespace hybrid_servo::lp
