#include "mrld/diagnostics.hpp"

#include "mrld/error.hpp"
#include "mrld/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mrld {

bool DiagnosticsReport::has_warning(const std::string& code) const {
  return std::find(warnings.begin(), warnings.end(), code) != warnings.end();
}

void DiagnosticsReport::add_warning(const std::string& code) {
  if (!has_warning(code)) warnings.push_back(code);
}

namespace {

bool is_symmetric(const Eigen::MatrixXd& m) {
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * scale;
}

}  // namespace

DiagnosticsReport assess(const Eigen::MatrixXd& matrix, const AssessOptions& options) {
  if (matrix.rows() != matrix.cols() || matrix.rows() == 0) {
    throw Error(ErrorCode::kInvalidInput, "assess() needs a non-empty square matrix");
  }
  if (!matrix.allFinite()) {
    throw Error(ErrorCode::kInvalidInput, "assess() needs finite entries");
  }
  const auto n = matrix.rows();
  const double eps = std::numeric_limits<double>::epsilon();
  DiagnosticsReport report;

  double abs_max = 0.0;
  double abs_min = 0.0;
  const bool symmetric = is_symmetric(matrix);
  if (symmetric) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(matrix, Eigen::EigenvaluesOnly);
    const Eigen::VectorXd& lambda = eig.eigenvalues();
    report.min_eigenvalue = lambda.minCoeff();
    abs_max = lambda.cwiseAbs().maxCoeff();
    abs_min = lambda.cwiseAbs().minCoeff();
  } else {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(matrix);
    abs_max = svd.singularValues().maxCoeff();
    abs_min = svd.singularValues().minCoeff();
    Eigen::EigenSolver<Eigen::MatrixXd> eig(matrix, false);
    report.min_eigenvalue = eig.eigenvalues().real().minCoeff();
  }

  report.singular = abs_max == 0.0 || abs_min <= static_cast<double>(n) * eps * abs_max;
  if (report.singular) {
    report.condition_number = std::numeric_limits<double>::infinity();
    report.determinant = 0.0;
    report.log_abs_determinant = -std::numeric_limits<double>::infinity();
    report.determinant_sign = 0;
    report.add_warning(warning::kSingular);
  } else {
    report.condition_number = abs_max / abs_min;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(matrix);
    const Eigen::MatrixXd& packed = lu.matrixLU();
    double log_abs = 0.0;
    int sign = lu.permutationP().determinant();
    for (Eigen::Index i = 0; i < n; ++i) {
      const double u = packed(i, i);
      log_abs += std::log(std::fabs(u));
      if (u < 0.0) sign = -sign;
    }
    report.log_abs_determinant = log_abs;
    report.determinant_sign = sign;
    report.determinant = sign * std::exp(log_abs);
  }

  if (report.condition_number > options.near_singular_condition) {
    report.add_warning(warning::kNearSingular);
  }
  if (report.condition_number > options.unreliable_condition) {
    report.add_warning(warning::kUnreliable);
  }
  if (symmetric && report.min_eigenvalue <= 0.0) {
    report.add_warning(warning::kNotPositiveDefinite);
  }
  if (symmetric && !report.singular && report.min_eigenvalue > 0.0) {
    Eigen::LLT<Eigen::MatrixXd> llt(matrix);
    if (llt.info() == Eigen::Success) {
      const Eigen::MatrixXd inverse = llt.solve(Eigen::MatrixXd::Identity(n, n));
      report.max_abs_inverse_element = inverse.cwiseAbs().maxCoeff();
    }
  }
  return report;
}

CorrelationMatrix ridge_adjust(const CorrelationMatrix& corr, double epsilon) {
  return corr.with_ridge(epsilon);
}

RidgeSensitivity ridge_sensitivity(const SummarySet& summary, const CorrelationMatrix& corr,
                                   double epsilon) {
  RidgeSensitivity out;
  out.epsilon = epsilon;
  out.estimate_before = std::numeric_limits<double>::quiet_NaN();
  try {
    const CausalEstimate before = ivw_correlated(summary, corr);
    out.estimate_before = before.estimate;
    out.se_before = before.se_fixed;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kSingularWeightMatrix) throw;
  }
  const CausalEstimate after = ivw_correlated(summary, ridge_adjust(corr, epsilon));
  out.estimate_after = after.estimate;
  out.se_after = after.se_fixed;
  if (out.se_before && std::isfinite(out.estimate_before)) {
    out.shift_in_se = std::fabs(out.estimate_after - out.estimate_before) / *out.se_before;
  } else {
    out.shift_in_se = std::numeric_limits<double>::infinity();
  }
  out.flagged = out.shift_in_se > 1.0;
  return out;
}

Eigen::VectorXd variance_explained(const SummarySet& summary) {
  std::string missing;
  for (const auto& v : summary.variants()) {
    if (!v.maf) missing += (missing.empty() ? "" : ",") + v.variant_id;
  }
  if (!missing.empty()) {
    throw Error(ErrorCode::kMissingMaf, "maf missing for variants: " + missing);
  }
  Eigen::VectorXd out(summary.size());
  for (std::size_t j = 0; j < summary.size(); ++j) {
    const auto& v = summary[j];
    out[static_cast<Eigen::Index>(j)] = v.beta_x * v.beta_x * *v.maf * (1.0 - *v.maf);
  }
  return out;
}

}  // namespace mrld
