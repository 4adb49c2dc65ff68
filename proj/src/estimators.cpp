#include "mrld/estimators.hpp"

#include "mrld/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace mrld {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

DiagnosticsReport diagonal_report(const Eigen::VectorXd& diag) {
  DiagnosticsReport r;
  const double hi = diag.maxCoeff();
  const double lo = diag.minCoeff();
  r.min_eigenvalue = lo;
  r.condition_number = hi / lo;
  r.log_abs_determinant = diag.array().log().sum();
  r.determinant_sign = 1;
  r.determinant = std::exp(r.log_abs_determinant);
  r.max_abs_inverse_element = 1.0 / lo;
  AssessOptions defaults;
  if (r.condition_number > defaults.near_singular_condition) r.add_warning(warning::kNearSingular);
  if (r.condition_number > defaults.unreliable_condition) r.add_warning(warning::kUnreliable);
  return r;
}

// Random-effects SE: fixed-effect SE inflated by the residual scale, floored at 1.
std::optional<double> random_se(const std::optional<double>& se_fixed, double sigma,
                                int n_instruments) {
  if (!se_fixed) return std::nullopt;
  if (n_instruments < 2) return se_fixed;
  return *se_fixed * std::max(sigma, 1.0);
}

struct Centred {
  Eigen::MatrixXd genotypes;
  Eigen::VectorXd risk_factor;
  Eigen::VectorXd outcome;
};

Centred centre(const IndividualData& data) {
  Centred c;
  c.genotypes = data.genotypes().rowwise() - data.genotypes().colwise().mean();
  c.risk_factor = data.risk_factor().array() - data.risk_factor().mean();
  c.outcome = data.outcome().array() - data.outcome().mean();
  return c;
}

Eigen::ColPivHouseholderQR<Eigen::MatrixXd> checked_qr(const Eigen::MatrixXd& z,
                                                       const std::vector<std::string>& ids) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(z);
  // Centring leaves roundoff in exactly collinear columns, above Eigen's default.
  qr.setThreshold(1e-10);
  if (qr.rank() < z.cols()) {
    std::string cols;
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index i = qr.rank(); i < z.cols(); ++i) {
      cols += (cols.empty() ? "" : ",") + ids[static_cast<std::size_t>(perm[i])];
    }
    throw Error(ErrorCode::kSingularDesign,
                "genotype cross-product matrix is singular; collinear columns: " + cols);
  }
  return qr;
}

}  // namespace

// ---------------------------------------------------------------------------

IndividualData::IndividualData(Eigen::MatrixXd genotypes, Eigen::VectorXd risk_factor,
                               Eigen::VectorXd outcome, std::vector<std::string> variant_ids)
    : genotypes_(std::move(genotypes)),
      risk_factor_(std::move(risk_factor)),
      outcome_(std::move(outcome)),
      variant_ids_(std::move(variant_ids)) {
  const Eigen::Index n = genotypes_.rows();
  const Eigen::Index j = genotypes_.cols();
  if (risk_factor_.size() != n || outcome_.size() != n) {
    throw Error(ErrorCode::kInvalidInput, "genotype, risk factor and outcome lengths differ");
  }
  if (j == 0) throw Error(ErrorCode::kInvalidInput, "no genotype columns");
  if (n <= j) {
    throw Error(ErrorCode::kInvalidInput, "need more individuals than variants");
  }
  if (!genotypes_.allFinite() || !risk_factor_.allFinite() || !outcome_.allFinite()) {
    throw Error(ErrorCode::kInvalidInput, "individual-level data contain non-finite values");
  }
  if (variant_ids_.empty()) {
    for (Eigen::Index c = 0; c < j; ++c) variant_ids_.push_back("v" + std::to_string(c + 1));
  }
  if (variant_ids_.size() != static_cast<std::size_t>(j)) {
    throw Error(ErrorCode::kInvalidInput, "variant id count does not match genotype columns");
  }
  for (Eigen::Index c = 0; c < j; ++c) {
    if ((genotypes_.col(c).array() == genotypes_(0, c)).all()) {
      throw Error(ErrorCode::kZeroVariance,
                  "genotype column has zero variance: " + variant_ids_[static_cast<std::size_t>(c)]);
    }
  }
}

// ---------------------------------------------------------------------------

CausalEstimate ivw_uncorrelated(const SummarySet& summary) {
  const Eigen::VectorXd bx = summary.beta_x();
  const Eigen::VectorXd by = summary.beta_y();
  const Eigen::VectorXd w = summary.se_y().array().square().inverse();
  const double info = (w.array() * bx.array().square()).sum();
  if (!(info > 0.0)) {
    throw Error(ErrorCode::kUndefinedEstimate, "all risk-factor associations are zero");
  }
  CausalEstimate out;
  out.n_instruments = static_cast<int>(summary.size());
  out.estimate = (w.array() * bx.array() * by.array()).sum() / info;
  out.se_fixed = 1.0 / std::sqrt(info);
  if (out.n_instruments > 1) {
    const Eigen::ArrayXd resid = by.array() - out.estimate * bx.array();
    out.residual_sigma =
        std::sqrt((w.array() * resid.square()).sum() / static_cast<double>(out.n_instruments - 1));
  }
  out.se_random = random_se(out.se_fixed, out.residual_sigma, out.n_instruments);
  out.diagnostics = diagonal_report(summary.se_y().array().square());
  return out;
}

double generalized_residual_sigma(const Eigen::VectorXd& beta_x, const Eigen::VectorXd& beta_y,
                                  const Eigen::MatrixXd& omega, double estimate) {
  const Eigen::Index j = beta_x.size();
  if (j < 2) return 0.0;
  const Eigen::VectorXd resid = beta_y - estimate * beta_x;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(omega);
  const double q = resid.dot(lu.solve(resid));
  return std::sqrt(std::max(q, 0.0) / static_cast<double>(j - 1));
}

CausalEstimate gls_ivw(const Eigen::VectorXd& beta_x, const Eigen::VectorXd& beta_y,
                       const Eigen::MatrixXd& omega) {
  const Eigen::Index j = beta_x.size();
  if (beta_y.size() != j || omega.rows() != j || omega.cols() != j || j == 0) {
    throw Error(ErrorCode::kInvalidInput, "inconsistent dimensions in weighted regression");
  }
  if (beta_x.isZero(0.0)) {
    throw Error(ErrorCode::kUndefinedEstimate, "all risk-factor associations are zero");
  }
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(omega);
  const double rcond = lu.rcond();
  if (!(rcond >= kEps)) {
    throw Error(ErrorCode::kSingularWeightMatrix,
                "weighting matrix is computationally singular (reciprocal condition number " +
                    std::to_string(rcond) + ")");
  }
  const Eigen::VectorXd weighted_x = lu.solve(beta_x);
  const double info = beta_x.dot(weighted_x);
  const double score = beta_y.dot(weighted_x);
  if (info == 0.0 || !std::isfinite(info)) {
    throw Error(ErrorCode::kUndefinedEstimate, "information b_x' Omega^-1 b_x is zero");
  }

  CausalEstimate out;
  out.n_instruments = static_cast<int>(j);
  out.estimate = score / info;
  out.diagnostics = assess(omega);
  if (info > 0.0) {
    out.se_fixed = 1.0 / std::sqrt(info);
  } else {
    out.diagnostics.variance_valid = false;
    out.diagnostics.add_warning(warning::kNegVariance);
  }
  if (j > 1) {
    const Eigen::VectorXd resid = beta_y - out.estimate * beta_x;
    const double q = resid.dot(lu.solve(resid));
    out.residual_sigma = std::sqrt(std::max(q, 0.0) / static_cast<double>(j - 1));
  }
  out.se_random = random_se(out.se_fixed, out.residual_sigma, out.n_instruments);
  return out;
}

CausalEstimate ivw_correlated(const SummarySet& summary, const CorrelationMatrix& corr) {
  const WeightMatrix omega = build_omega(summary, corr);
  CausalEstimate out = gls_ivw(summary.beta_x(), summary.beta_y(), omega.values);
  if (corr.is_ridge_adjusted()) out.diagnostics.add_warning(warning::kRidgeAdjusted);
  return out;
}

CausalEstimate ivw_correlated_cholesky(const SummarySet& summary, const CorrelationMatrix& corr) {
  const WeightMatrix omega = build_omega(summary, corr);
  Eigen::LLT<Eigen::MatrixXd> llt(omega.values);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::kNotPositiveDefinite,
                "Cholesky factorization of the weighting matrix failed");
  }
  const auto lower = llt.matrixL();
  const Eigen::VectorXd cx = lower.solve(summary.beta_x());
  const Eigen::VectorXd cy = lower.solve(summary.beta_y());
  const double info = cx.squaredNorm();
  if (!(info > 0.0)) {
    throw Error(ErrorCode::kUndefinedEstimate, "all risk-factor associations are zero");
  }
  CausalEstimate out;
  out.n_instruments = static_cast<int>(summary.size());
  out.estimate = cx.dot(cy) / info;
  out.se_fixed = 1.0 / std::sqrt(info);
  if (out.n_instruments > 1) {
    out.residual_sigma = std::sqrt((cy - out.estimate * cx).squaredNorm() /
                                   static_cast<double>(out.n_instruments - 1));
  }
  out.se_random = random_se(out.se_fixed, out.residual_sigma, out.n_instruments);
  out.diagnostics = assess(omega.values);
  if (corr.is_ridge_adjusted()) out.diagnostics.add_warning(warning::kRidgeAdjusted);
  return out;
}

PcaIvwResult pca_ivw(const SummarySet& summary, const CorrelationMatrix& corr,
                     double variance_threshold) {
  PcaComponents comps = pca_components(build_psi(summary, corr), variance_threshold);
  const Eigen::MatrixXd omega = build_omega(summary, corr).values;
  const Eigen::MatrixXd& w = comps.loadings;
  const Eigen::VectorXd bx = w.transpose() * summary.beta_x();
  const Eigen::VectorXd by = w.transpose() * summary.beta_y();
  Eigen::MatrixXd omega_t = w.transpose() * omega * w;
  omega_t = 0.5 * (omega_t + omega_t.transpose());
  CausalEstimate est = gls_ivw(bx, by, omega_t);
  for (const auto& code : comps.warnings) est.diagnostics.add_warning(code);
  if (corr.is_ridge_adjusted()) est.diagnostics.add_warning(warning::kRidgeAdjusted);
  return PcaIvwResult{std::move(est), std::move(comps)};
}

// ---------------------------------------------------------------------------

CausalEstimate two_stage_least_squares(const IndividualData& data) {
  const Centred c = centre(data);
  const auto qr = checked_qr(c.genotypes, data.variant_ids());
  const Eigen::VectorXd fitted = c.genotypes * qr.solve(c.risk_factor);
  const double denom = fitted.dot(c.risk_factor);
  if (!(std::fabs(denom) > 0.0)) {
    throw Error(ErrorCode::kUndefinedEstimate, "instruments do not predict the risk factor");
  }
  CausalEstimate out;
  out.n_instruments = static_cast<int>(data.variants());
  out.estimate = fitted.dot(c.outcome) / denom;
  const Eigen::VectorXd resid = c.outcome - out.estimate * c.risk_factor;
  const double n = static_cast<double>(data.samples());
  const double sigma2 = resid.squaredNorm() / (n - 2.0);
  out.residual_sigma = std::sqrt(sigma2);
  out.se_fixed = std::sqrt(sigma2 / fitted.squaredNorm());
  out.se_random = out.se_fixed;
  out.diagnostics = assess(c.genotypes.transpose() * c.genotypes / (n - 1.0));
  return out;
}

SummarizedData summarize(const IndividualData& data, StandardErrorModel model) {
  const Centred c = centre(data);
  const Eigen::Index n_ind = data.samples();
  const Eigen::Index j = data.variants();
  const double n = static_cast<double>(n_ind);
  const Eigen::VectorXd d = c.genotypes.colwise().squaredNorm().transpose();
  const Eigen::VectorXd gx = c.genotypes.transpose() * c.risk_factor;
  const Eigen::VectorXd gy = c.genotypes.transpose() * c.outcome;

  double joint_var_x = 0.0;
  double joint_var_y = 0.0;
  if (model == StandardErrorModel::kJointResidual) {
    if (n_ind <= j + 1) {
      throw Error(ErrorCode::kInvalidInput, "joint residual SEs need N > J + 1");
    }
    const auto qr = checked_qr(c.genotypes, data.variant_ids());
    const double df = n - static_cast<double>(j) - 1.0;
    joint_var_x = (c.risk_factor - c.genotypes * qr.solve(c.risk_factor)).squaredNorm() / df;
    joint_var_y = (c.outcome - c.genotypes * qr.solve(c.outcome)).squaredNorm() / df;
  }
  const double xx = c.risk_factor.squaredNorm();
  const double yy = c.outcome.squaredNorm();

  std::vector<VariantSummary> variants;
  variants.reserve(static_cast<std::size_t>(j));
  for (Eigen::Index k = 0; k < j; ++k) {
    VariantSummary v;
    v.variant_id = data.variant_ids()[static_cast<std::size_t>(k)];
    v.effect_allele = "A1";
    v.other_allele = "A2";
    v.beta_x = gx[k] / d[k];
    v.beta_y = gy[k] / d[k];
    if (model == StandardErrorModel::kMarginal) {
      const double rss_x = std::max(xx - v.beta_x * gx[k], 0.0);
      const double rss_y = std::max(yy - v.beta_y * gy[k], 0.0);
      v.se_x = std::sqrt(rss_x / (n - 2.0) / d[k]);
      v.se_y = std::sqrt(rss_y / (n - 2.0) / d[k]);
    } else {
      v.se_x = std::sqrt(joint_var_x / d[k]);
      v.se_y = std::sqrt(joint_var_y / d[k]);
    }
    const double p = data.genotypes().col(k).mean() / 2.0;
    const double maf = std::min(p, 1.0 - p);
    if (maf > 0.0 && maf <= 0.5) v.maf = maf;
    v.n_x = n;
    v.n_y = n;
    variants.push_back(std::move(v));
  }
  return SummarizedData{SummarySet(std::move(variants), {{"source", "summarize"}}),
                        CorrelationMatrix(data.variant_ids(), pearson_from_centred(c.genotypes))};
}

Eigen::VectorXd first_stage_coefficients(const IndividualData& data) {
  const Centred c = centre(data);
  return checked_qr(c.genotypes, data.variant_ids()).solve(c.risk_factor);
}

CausalEstimate allele_score_estimate(const IndividualData& data, const Eigen::VectorXd& weights) {
  if (weights.size() != data.variants()) {
    throw Error(ErrorCode::kInvalidInput, "allele score weights do not match the variant count");
  }
  if (!weights.allFinite() || weights.isZero(0.0)) {
    throw Error(ErrorCode::kInvalidInput, "allele score weights must be finite and not all zero");
  }
  const Eigen::VectorXd score = data.genotypes() * weights;
  if ((score.array() == score[0]).all()) {
    throw Error(ErrorCode::kZeroVariance, "allele score has zero variance");
  }
  return two_stage_least_squares(
      IndividualData(score, data.risk_factor(), data.outcome(), {"allele_score"}));
}

}  // namespace mrld
