// Numerical health checks for correlation and weighting matrices.
//
// A near-singular weighting matrix has a very large inverse, so small
// inconsistencies between association estimates and the correlation matrix
// are amplified into overly precise or misleading causal estimates. assess()
// quantifies that risk; ridge_adjust() is the opt-in remedy, and
// ridge_sensitivity() reports how much the estimate moves under it.
#pragma once

#include "mrld/core_model.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace mrld {

// Stable warning codes.
namespace warning {
inline constexpr const char* kNearSingular = "NEAR_SINGULAR";
inline constexpr const char* kUnreliable = "UNRELIABLE";
inline constexpr const char* kSingular = "SINGULAR";
inline constexpr const char* kNotPositiveDefinite = "NOT_POSITIVE_DEFINITE";
inline constexpr const char* kNegVariance = "NEG_VARIANCE";
inline constexpr const char* kRidgeSensitive = "RIDGE_SENSITIVE";
inline constexpr const char* kRidgeAdjusted = "RIDGE_ADJUSTED";
inline constexpr const char* kNegativeEigenvalue = "NEGATIVE_EIGENVALUE";
inline constexpr const char* kDegenerateCovariance = "DEGENERATE_COVARIANCE";
}  // namespace warning

struct DiagnosticsReport {
  double determinant = 0.0;          // 0 when singular; may underflow for large J
  double log_abs_determinant = 0.0;  // -inf when singular
  int determinant_sign = 0;
  double condition_number = 1.0;     // +inf when singular
  std::optional<double> max_abs_inverse_element;  // only for positive definite input
  double min_eigenvalue = 0.0;
  bool singular = false;
  bool variance_valid = true;
  std::vector<std::string> warnings;

  bool has_warning(const std::string& code) const;
  void add_warning(const std::string& code);
};

struct AssessOptions {
  double near_singular_condition = 1e6;
  double unreliable_condition = 1e12;
};

DiagnosticsReport assess(const Eigen::MatrixXd& matrix, const AssessOptions& options = {});

// Adds epsilon to every diagonal entry; the result is marked ridge-adjusted.
CorrelationMatrix ridge_adjust(const CorrelationMatrix& corr, double epsilon);

struct RidgeSensitivity {
  double epsilon = 0.0;
  double estimate_before = 0.0;
  std::optional<double> se_before;
  double estimate_after = 0.0;
  std::optional<double> se_after;
  double shift_in_se = 0.0;  // |after - before| / se_before; inf if se_before undefined
  bool flagged = false;      // shift exceeds one pre-adjustment standard error
};

// Correlated IVW estimate with and without the ridge; flags RIDGE_SENSITIVE
// behaviour when the estimate moves by more than one pre-adjustment SE.
RidgeSensitivity ridge_sensitivity(const SummarySet& summary, const CorrelationMatrix& corr,
                                   double epsilon);

// beta_x^2 * maf * (1 - maf) per variant, exactly as the formula is usually
// quoted. A diallelic genotype has variance 2 maf (1 - maf), so this is half
// the variance explained when beta_x is in standard-deviation units.
Eigen::VectorXd variance_explained(const SummarySet& summary);

}  // namespace mrld
