#include "hybrid_servo/system_model.h"

#include <cmath>
#include <sstream>

#include "hybrid_servo/errors.h"

namespace hybrid_servo {

namespace {

void CheckDims(std::vector<ValidationIssue>& issues, bool ok,
               const std::string& message) {
  if (!ok) {
    issues.push_back({ValidationIssue::Kind::kDimensionMismatch, message});
  }
}

template <typename T>
void CheckFinite(std::vector<ValidationIssue>& issues, const T& m,
                 const std::string& name) {
  if (!m.allFinite()) {
    issues.push_back(
        {ValidationIssue::Kind::kNonFinite, name + " has non-finite entries"});
  }
}

}  // namespace

GuardConditions EmptyGuard(int n_phi, int n) {
  GuardConditions guard;
  guard.Lambda = Matrix::Zero(0, n_phi + n);
  guard.b_Lambda = Vector::Zero(0);
  guard.Gamma = Matrix::Zero(0, n_phi + n);
  guard.b_Gamma = Vector::Zero(0);
  return guard;
}

std::vector<ValidationIssue> Validate(const SystemInstance& instance,
                                      const GuardConditions& guard) {
  std::vector<ValidationIssue> issues;
  const int n = instance.n();
  const int n_phi = instance.n_phi();

  CheckDims(issues, instance.n_u >= 0 && instance.n_a >= 0,
            "n_u and n_a must be nonnegative");
  CheckDims(issues, instance.N.cols() == n || instance.N.rows() == 0,
            "N must have n = n_u + n_a columns");
  CheckDims(issues, instance.G.cols() == n, "G must have n columns");
  CheckDims(issues, instance.b_G.size() == instance.G.rows(),
            "len(b_G) must equal rows(G)");
  CheckDims(issues, instance.F.size() == n, "len(F) must equal n");

  const Eigen::Index guard_cols = n_phi + n;
  CheckDims(issues, guard.Lambda.cols() == guard_cols,
            "Lambda must have n_phi + n columns");
  CheckDims(issues, guard.b_Lambda.size() == guard.Lambda.rows(),
            "len(b_Lambda) must equal rows(Lambda)");
  CheckDims(issues, guard.Gamma.cols() == guard_cols || guard.Gamma.rows() == 0,
            "Gamma must have n_phi + n columns");
  CheckDims(issues, guard.b_Gamma.size() == guard.Gamma.rows(),
            "len(b_Gamma) must equal rows(Gamma)");

  CheckFinite(issues, instance.N, "N");
  CheckFinite(issues, instance.G, "G");
  CheckFinite(issues, instance.b_G, "b_G");
  CheckFinite(issues, instance.F, "F");
  CheckFinite(issues, guard.Lambda, "Lambda");
  CheckFinite(issues, guard.b_Lambda, "b_Lambda");
  CheckFinite(issues, guard.Gamma, "Gamma");
  CheckFinite(issues, guard.b_Gamma, "b_Gamma");

  if (instance.J_phi.has_value() != instance.Omega.has_value()) {
    CheckDims(issues, false, "J_phi and Omega must be given together");
  } else if (instance.J_phi) {
    const Matrix& J = *instance.J_phi;
    const Matrix& Om = *instance.Omega;
    CheckFinite(issues, J, "J_phi");
    CheckFinite(issues, Om, "Omega");
    const bool shapes_ok = J.cols() == Om.rows() && J.rows() == n_phi &&
                           Om.cols() == n;
    CheckDims(issues, shapes_ok,
              "J_phi (n_phi x n_q) and Omega (n_q x n) shapes disagree with N");
    if (shapes_ok && J.allFinite() && Om.allFinite() &&
        instance.N.allFinite()) {
      const double err =
          n_phi == 0 ? 0.0 : (J * Om - instance.N).cwiseAbs().maxCoeff();
      if (err > 1e-10) {
        std::ostringstream msg;
        msg << "N differs from J_phi * Omega by " << err;
        issues.push_back(
            {ValidationIssue::Kind::kInconsistentProduct, msg.str()});
      }
    }
  }
  return issues;
}

Matrix AssembleN(const Matrix& J_phi, const Matrix& Omega) {
  if (J_phi.cols() != Omega.rows()) {
    throw SolverError(ErrorCode::kDimensionMismatch,
                      "cols(J_phi) must equal rows(Omega)");
  }
  return J_phi * Omega;
}

Matrix UnactuatedSelector(int n_u, int n_a) {
  Matrix H = Matrix::Zero(n_u, n_u + n_a);
  H.leftCols(n_u).setIdentity();
  return H;
}

Matrix TransformFromActuatedBlock(int n_u, const Matrix& R_a) {
  const Eigen::Index n_a = R_a.rows();
  Matrix T = Matrix::Zero(n_u + n_a, n_u + n_a);
  T.topLeftCorner(n_u, n_u).setIdentity();
  T.bottomRightCorner(n_a, n_a) = R_a;
  return T;
}

std::vector<std::string> CheckActionInvariants(const HybridAction& action,
                                               int n_u) {
  std::vector<std::string> out;
  const Eigen::Index n_a = action.R_a.rows();
  const Eigen::Index n = n_u + n_a;
  if (action.n_av < 0 || action.n_af < 0 || action.n_av + action.n_af != n_a) {
    out.push_back("n_av + n_af must equal n_a");
  }
  if (action.R_a.cols() != n_a || action.T.rows() != n || action.T.cols() != n) {
    out.push_back("T must be n x n and R_a n_a x n_a");
    return out;
  }
  Matrix expected = TransformFromActuatedBlock(n_u, action.R_a);
  if ((expected - action.T).cwiseAbs().maxCoeff() > 0.0) {
    out.push_back("T is not diag(I_u, R_a)");
  }
  if (n_a > 0) {
    Eigen::JacobiSVD<Matrix> svd(action.R_a);
    const auto& sv = svd.singularValues();
    const double smallest = sv(sv.size() - 1);
    if (!(smallest > 0.0) || sv(0) / smallest > 1e10) {
      out.push_back("T is not invertible (condition >= 1e10)");
    }
  }
  if (action.w_av.size() != action.n_av) out.push_back("len(w_av) != n_av");
  if (action.eta_af.size() != action.n_af) out.push_back("len(eta_af) != n_af");
  if (action.eta.size() != n) {
    out.push_back("len(eta) != n");
  } else if (n_u > 0 && action.eta.head(n_u).cwiseAbs().maxCoeff() > 1e-8) {
    out.push_back("unactuated block of eta is not zero");
  }
  const bool finite = action.T.allFinite() && action.w_av.allFinite() &&
                      action.eta_af.allFinite() && action.lambda.allFinite() &&
                      action.eta.allFinite();
  if (!finite) out.push_back("action has non-finite entries");
  return out;
}

}  // namespace hybrid_servo
