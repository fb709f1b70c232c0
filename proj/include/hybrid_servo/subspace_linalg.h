#pragma once

#include <Eigen/Dense>

namespace hybrid_servo {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace linalg {

constexpr double kDefaultRankTol = 1e-8;

/// Orthonormal basis (as columns) together with the rank of the matrix it was
/// derived from and the relative tolerance used for that rank decision.
struct SubspaceBasis {
  Matrix basis;
  int source_rank = 0;
  double tolerance_used = kDefaultRankTol;

  int dim() const { return static_cast<int>(basis.cols()); }
};

/// Throws SolverError(kNonFinite) if any entry is NaN or Inf.
void RequireFinite(const Matrix& m, const char* what);
void RequireFinite(const Vector& v, const char* what);

/// Number of singular values strictly above rel_tol * sigma_max. Empty and
/// zero matrices have rank 0.
int NumericalRank(const Matrix& m, double rel_tol = kDefaultRankTol);

/// Orthonormal basis of null(m). A matrix with zero rows yields the identity;
/// a full-column-rank matrix yields an empty (cols x 0) basis.
SubspaceBasis NullSpaceBasis(const Matrix& m, double rel_tol = kDefaultRankTol);

/// Orthonormal basis of the row space of m, returned as columns.
SubspaceBasis RowSpaceBasis(const Matrix& m, double rel_tol = kDefaultRankTol);

/// Minimum Euclidean norm solution of a v = b. Throws
/// SolverError(kInconsistentSystem) when ||a v - b|| > 1e-8 (1 + ||b||).
Vector MinNormSolution(const Matrix& a, const Vector& b,
                       double rel_tol = kDefaultRankTol);

/// Solves a square system. Throws SolverError(kSingularSystem) when the
/// reciprocal condition estimate is below 1e-12 or the residual check fails.
Vector SolveSquare(const Matrix& a, const Vector& b);

/// Vertical concatenation that tolerates zero-row blocks.
Matrix StackRows(const Matrix& top, const Matrix& bottom);

/// Orthonormal basis of null(m) chosen to be as axis-aligned as possible:
/// columns come from pivoted QR of the projector onto null(m), so each column
/// is the projection of a coordinate axis, orthogonalized against earlier
/// ones. The sign makes each column's pivot component positive.
SubspaceBasis AxisAlignedNullSpaceBasis(const Matrix& m,
                                        double rel_tol = kDefaultRankTol);

}  // namespace linalg
}  // namespace hybrid_servo
