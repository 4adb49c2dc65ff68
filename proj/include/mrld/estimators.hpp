// Causal effect estimators.
//
// Summarized-data estimators are inverse-variance weighted (IVW) regressions of
// the outcome associations on the risk-factor associations through the origin.
// With correlated variants the regression is generalized least squares with
// weighting matrix Omega; the Cholesky form whitens by Omega's lower factor
// first and gives the same answer. The individual-level estimators (2SLS and
// allele scores) are the references the summarized estimators reproduce.
#pragma once

#include "mrld/core_model.hpp"
#include "mrld/diagnostics.hpp"
#include "mrld/selection.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace mrld {

struct CausalEstimate {
  double estimate = 0.0;
  // Undefined (nullopt) when the information b_x' Omega^-1 b_x is not positive.
  std::optional<double> se_fixed;
  std::optional<double> se_random;
  double residual_sigma = 0.0;  // 0 with a single instrument
  int n_instruments = 0;
  DiagnosticsReport diagnostics;

  bool se_defined() const { return se_fixed.has_value(); }
};

// Genotypes (N x J allele counts or dosages), risk factor and outcome for the
// same N individuals.
class IndividualData {
 public:
  IndividualData(Eigen::MatrixXd genotypes, Eigen::VectorXd risk_factor, Eigen::VectorXd outcome,
                 std::vector<std::string> variant_ids = {});

  const Eigen::MatrixXd& genotypes() const { return genotypes_; }
  const Eigen::VectorXd& risk_factor() const { return risk_factor_; }
  const Eigen::VectorXd& outcome() const { return outcome_; }
  const std::vector<std::string>& variant_ids() const { return variant_ids_; }
  Eigen::Index samples() const { return genotypes_.rows(); }
  Eigen::Index variants() const { return genotypes_.cols(); }

 private:
  Eigen::MatrixXd genotypes_;
  Eigen::VectorXd risk_factor_;
  Eigen::VectorXd outcome_;
  std::vector<std::string> variant_ids_;
};

CausalEstimate ivw_uncorrelated(const SummarySet& summary);

// Generalized weighted regression with Omega = diag(se_y) rho diag(se_y).
// Throws kSingularWeightMatrix when Omega is computationally singular
// (reciprocal condition number below machine epsilon). A non-positive
// information value returns the estimate with undefined SEs and a
// NEG_VARIANCE diagnostic rather than throwing.
CausalEstimate ivw_correlated(const SummarySet& summary, const CorrelationMatrix& corr);

// Same estimator computed by whitening with the inverse lower Cholesky factor
// of Omega followed by ordinary regression through the origin. Throws
// kNotPositiveDefinite when the factorization fails.
CausalEstimate ivw_correlated_cholesky(const SummarySet& summary, const CorrelationMatrix& corr);

// The generalized IVW core on raw vectors and weighting matrix.
CausalEstimate gls_ivw(const Eigen::VectorXd& beta_x, const Eigen::VectorXd& beta_y,
                       const Eigen::MatrixXd& omega);

// Residual scale of the correlated fit from generalized residuals,
// sqrt(r' Omega^-1 r / (J - 1)); the whitened-residual route in
// ivw_correlated_cholesky() must agree with it.
double generalized_residual_sigma(const Eigen::VectorXd& beta_x, const Eigen::VectorXd& beta_y,
                                  const Eigen::MatrixXd& omega, double estimate);

struct PcaIvwResult {
  CausalEstimate estimate;
  PcaComponents components;
};

// IVW on principal components of Psi: b~ = W_k' b, Omega~ = W_k' Omega W_k.
PcaIvwResult pca_ivw(const SummarySet& summary, const CorrelationMatrix& corr,
                     double variance_threshold);

// Two-stage least squares with intercepts in both stages (handled by centring).
CausalEstimate two_stage_least_squares(const IndividualData& data);

enum class StandardErrorModel {
  // Ordinary simple-regression SEs: each variant's own residual variance.
  kMarginal,
  // One residual variance per trait, from the regression on all variants
  // jointly: se_j = sigma / sqrt(sum_i (g_ij - mean_j)^2). With this scale the
  // correlated IVW estimate equals 2SLS exactly.
  kJointResidual,
};

struct SummarizedData {
  SummarySet summary;
  CorrelationMatrix corr;
};

// Univariable regressions of risk factor and outcome on each variant (with
// intercept) and the sample correlation matrix of the genotypes.
SummarizedData summarize(const IndividualData& data,
                         StandardErrorModel model = StandardErrorModel::kMarginal);

// Multivariable least-squares coefficients of the risk factor on all variants
// (intercept included, not returned); the optimal allele-score weights.
Eigen::VectorXd first_stage_coefficients(const IndividualData& data);

// 2SLS with the single instrument genotypes * weights.
CausalEstimate allele_score_estimate(const IndividualData& data, const Eigen::VectorXd& weights);

}  // namespace mrld
