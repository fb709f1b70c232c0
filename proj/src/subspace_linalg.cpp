#include "hybrid_servo/subspace_linalg.h"

#include <algorithm>
#include <string>

#include "hybrid_servo/errors.h"

namespace hybrid_servo::linalg {

namespace {

int RankFromSingularValues(const Vector& sv, double rel_tol) {
  if (sv.size() == 0) return 0;
  const double sigma_max = sv.maxCoeff();
  if (!(sigma_max > 0.0)) return 0;
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > rel_tol * sigma_max) ++rank;
  }
  return rank;
}

void RequireTolerance(double rel_tol) {
  if (!(rel_tol > 0.0)) {
    throw SolverError(ErrorCode::kInvalidArgument,
                      "rank tolerance must be positive");
  }
}

}  // namespace

void RequireFinite(const Matrix& m, const char* what) {
  if (!m.allFinite()) {
    throw SolverError(ErrorCode::kNonFinite,
                      std::string(what) + " has non-finite entries");
  }
}

void RequireFinite(const Vector& v, const char* what) {
  if (!v.allFinite()) {
    throw SolverError(ErrorCode::kNonFinite,
                      std::string(what) + " has non-finite entries");
  }
}

int NumericalRank(const Matrix& m, double rel_tol) {
  RequireTolerance(rel_tol);
  RequireFinite(m, "matrix");
  if (m.rows() == 0 || m.cols() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return RankFromSingularValues(svd.singularValues(), rel_tol);
}

SubspaceBasis NullSpaceBasis(const Matrix& m, double rel_tol) {
  RequireTolerance(rel_tol);
  RequireFinite(m, "matrix");
  const Eigen::Index n = m.cols();
  SubspaceBasis out;
  out.tolerance_used = rel_tol;
  if (m.rows() == 0 || n == 0) {
    out.basis = Matrix::Identity(n, n);
    out.source_rank = 0;
    return out;
  }
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullV);
  const int rank = RankFromSingularValues(svd.singularValues(), rel_tol);
  out.source_rank = rank;
  out.basis = svd.matrixV().rightCols(n - rank);
  return out;
}

SubspaceBasis RowSpaceBasis(const Matrix& m, double rel_tol) {
  RequireTolerance(rel_tol);
  RequireFinite(m, "matrix");
  const Eigen::Index n = m.cols();
  SubspaceBasis out;
  out.tolerance_used = rel_tol;
  if (m.rows() == 0 || n == 0) {
    out.basis = Matrix::Zero(n, 0);
    return out;
  }
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullV);
  const int rank = RankFromSingularValues(svd.singularValues(), rel_tol);
  out.source_rank = rank;
  out.basis = svd.matrixV().leftCols(rank);
  return out;
}

Vector MinNormSolution(const Matrix& a, const Vector& b, double rel_tol) {
  RequireTolerance(rel_tol);
  RequireFinite(a, "system matrix");
  RequireFinite(b, "right-hand side");
  if (a.rows() != b.size()) {
    throw SolverError(ErrorCode::kDimensionMismatch,
                      "rows(A) != len(b) in min-norm solve");
  }
  const Eigen::Index n = a.cols();
  if (a.rows() == 0 || n == 0) {
    if (b.size() > 0 && b.norm() > 1e-8) {
      throw SolverError(ErrorCode::kInconsistentSystem,
                        "nonzero right-hand side with no unknowns");
    }
    return Vector::Zero(n);
  }
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  const int rank = RankFromSingularValues(sv, rel_tol);
  Vector coeffs = svd.matrixU().leftCols(rank).transpose() * b;
  for (int i = 0; i < rank; ++i) coeffs(i) /= sv(i);
  Vector x = svd.matrixV().leftCols(rank) * coeffs;

  const double residual = (a * x - b).norm();
  if (residual > 1e-8 * (1.0 + b.norm())) {
    throw SolverError(ErrorCode::kInconsistentSystem,
                      "least-squares residual " + std::to_string(residual) +
                          " exceeds tolerance");
  }
  return x;
}

Vector SolveSquare(const Matrix& a, const Vector& b) {
  RequireFinite(a, "system matrix");
  RequireFinite(b, "right-hand side");
  if (a.rows() != a.cols() || a.rows() != b.size()) {
    throw SolverError(ErrorCode::kDimensionMismatch,
                      "square solve needs n x n matrix and length-n rhs");
  }
  if (a.rows() == 0) return Vector();
  Eigen::PartialPivLU<Matrix> lu(a);
  const double rcond = lu.rcond();
  if (!(rcond > 1e-12)) {
    throw SolverError(ErrorCode::kSingularSystem,
                      "reciprocal condition " + std::to_string(rcond));
  }
  Vector x = lu.solve(b);
  if (!x.allFinite() || (a * x - b).norm() > 1e-8 * (1.0 + b.norm())) {
    throw SolverError(ErrorCode::kSingularSystem, "residual check failed");
  }
  return x;
}

Matrix StackRows(const Matrix& top, const Matrix& bottom) {
  if (top.rows() == 0) return bottom;
  if (bottom.rows() == 0) return top;
  if (top.cols() != bottom.cols()) {
    throw SolverError(ErrorCode::kDimensionMismatch,
                      "cannot stack matrices with different column counts");
  }
  Matrix out(top.rows() + bottom.rows(), top.cols());
  out << top, bottom;
  return out;
}

SubspaceBasis AxisAlignedNullSpaceBasis(const Matrix& m, double rel_tol) {
  SubspaceBasis null = NullSpaceBasis(m, rel_tol);
  const Eigen::Index n = null.basis.rows();
  const Eigen::Index k = null.basis.cols();
  if (k == 0 || k == n) {
    if (k == n) null.basis = Matrix::Identity(n, n);
    return null;
  }
  const Matrix projector = null.basis * null.basis.transpose();
  Eigen::ColPivHouseholderQR<Matrix> qr(projector);
  const Matrix q = qr.householderQ() * Matrix::Identity(n, k);
  const auto& perm = qr.colsPermutation().indices();
  Matrix basis(n, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    Vector col = q.col(j);
    if (col(perm(j)) < 0.0) col = -col;
    basis.col(j) = col;
  }
  null.basis = basis;
  return null;
}

}  // namespace hybrid_servo::linalg
