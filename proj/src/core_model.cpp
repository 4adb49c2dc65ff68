#include "mrld/core_model.hpp"

#include "mrld/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <unordered_set>
#include <utility>

namespace mrld {

namespace {

std::unordered_map<std::string, std::size_t> build_index(const std::vector<std::string>& ids,
                                                         const char* what) {
  std::unordered_map<std::string, std::size_t> index;
  index.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!index.emplace(ids[i], i).second) {
      throw Error(ErrorCode::kInvalidInput,
                  std::string("duplicate variant id in ") + what + ": " + ids[i]);
    }
  }
  return index;
}

std::string upper(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return s;
}

// (s_i s_j) rho_ij entrywise, so the result is exactly symmetric.
Eigen::MatrixXd scaled(const Eigen::VectorXd& scale, const CorrelationMatrix& corr) {
  const Eigen::Index n = scale.size();
  Eigen::MatrixXd out(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) out(i, j) = (scale[i] * scale[j]) * corr(i, j);
  }
  return out;
}

void require_aligned(const SummarySet& summary, const CorrelationMatrix& corr) {
  if (summary.size() != corr.size()) {
    throw Error(ErrorCode::kInvalidInput, "summary and correlation matrix are not aligned");
  }
  for (std::size_t i = 0; i < summary.size(); ++i) {
    if (summary[i].variant_id != corr.ids()[i]) {
      throw Error(ErrorCode::kInvalidInput,
                  "summary and correlation matrix are not aligned at variant " +
                      summary[i].variant_id);
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// SummarySet

SummarySet::SummarySet(std::vector<VariantSummary> variants, Meta source_meta)
    : variants_(std::move(variants)), meta_(std::move(source_meta)) {
  if (variants_.empty()) {
    throw Error(ErrorCode::kInvalidInput, "summary set must contain at least one variant");
  }
  for (const auto& v : variants_) {
    if (!(v.se_x > 0.0) || !(v.se_y > 0.0) || !std::isfinite(v.se_x) || !std::isfinite(v.se_y)) {
      throw Error(ErrorCode::kInvalidInput,
                  "standard errors must be positive and finite for variant " + v.variant_id);
    }
    if (!std::isfinite(v.beta_x) || !std::isfinite(v.beta_y)) {
      throw Error(ErrorCode::kInvalidInput, "non-finite association for variant " + v.variant_id);
    }
    if (upper(v.effect_allele) == upper(v.other_allele)) {
      throw Error(ErrorCode::kInvalidInput,
                  "effect and other allele coincide for variant " + v.variant_id);
    }
    if (v.maf && !(*v.maf > 0.0 && *v.maf <= 0.5)) {
      throw Error(ErrorCode::kInvalidInput, "maf outside (0, 0.5] for variant " + v.variant_id);
    }
  }
  index_ = build_index(ids(), "summary set");
}

std::vector<std::string> SummarySet::ids() const {
  std::vector<std::string> out;
  out.reserve(variants_.size());
  for (const auto& v : variants_) out.push_back(v.variant_id);
  return out;
}

std::optional<std::size_t> SummarySet::index_of(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Eigen::VectorXd SummarySet::beta_x() const {
  Eigen::VectorXd v(size());
  for (std::size_t i = 0; i < size(); ++i) v[i] = variants_[i].beta_x;
  return v;
}

Eigen::VectorXd SummarySet::se_x() const {
  Eigen::VectorXd v(size());
  for (std::size_t i = 0; i < size(); ++i) v[i] = variants_[i].se_x;
  return v;
}

Eigen::VectorXd SummarySet::beta_y() const {
  Eigen::VectorXd v(size());
  for (std::size_t i = 0; i < size(); ++i) v[i] = variants_[i].beta_y;
  return v;
}

Eigen::VectorXd SummarySet::se_y() const {
  Eigen::VectorXd v(size());
  for (std::size_t i = 0; i < size(); ++i) v[i] = variants_[i].se_y;
  return v;
}

SummarySet SummarySet::subset(const std::vector<std::size_t>& indices) const {
  std::vector<VariantSummary> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(variants_.at(i));
  return SummarySet(std::move(out), meta_);
}

SummarySet SummarySet::select(const std::vector<std::string>& ids) const {
  std::vector<std::size_t> indices;
  indices.reserve(ids.size());
  for (const auto& id : ids) {
    auto i = index_of(id);
    if (!i) throw Error(ErrorCode::kInvalidInput, "unknown variant id: " + id);
    indices.push_back(*i);
  }
  return subset(indices);
}

// ---------------------------------------------------------------------------
// CorrelationMatrix

CorrelationMatrix::CorrelationMatrix(std::vector<std::string> ids, Eigen::MatrixXd values)
    : ids_(std::move(ids)), values_(std::move(values)) {
  const auto n = static_cast<Eigen::Index>(ids_.size());
  if (n == 0) throw Error(ErrorCode::kInvalidInput, "correlation matrix is empty");
  if (values_.rows() != n || values_.cols() != n) {
    throw Error(ErrorCode::kInvalidInput, "correlation matrix shape does not match its ids");
  }
  if (!values_.allFinite()) {
    throw Error(ErrorCode::kInvalidInput, "correlation matrix has non-finite entries");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (std::fabs(values_(i, j) - values_(j, i)) > kSymmetryTolerance) {
        throw Error(ErrorCode::kInvalidInput, "correlation matrix is not symmetric at (" +
                                                  ids_[i] + ", " + ids_[j] + ")");
      }
      if (std::fabs(values_(i, j)) > 1.0 + kSymmetryTolerance) {
        throw Error(ErrorCode::kInvalidInput, "correlation outside [-1, 1] at (" + ids_[i] +
                                                  ", " + ids_[j] + ")");
      }
    }
  }
  Eigen::MatrixXd sym = 0.5 * (values_ + values_.transpose());
  values_ = sym.cwiseMax(-1.0).cwiseMin(1.0);
  values_.diagonal().setOnes();
  index_ = build_index(ids_, "correlation matrix");
}

CorrelationMatrix::CorrelationMatrix(std::vector<std::string> ids, Eigen::MatrixXd values,
                                     double ridge_epsilon)
    : ids_(std::move(ids)), values_(std::move(values)), ridge_epsilon_(ridge_epsilon) {
  index_ = build_index(ids_, "correlation matrix");
}

std::optional<std::size_t> CorrelationMatrix::index_of(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

CorrelationMatrix CorrelationMatrix::subset(const std::vector<std::size_t>& indices) const {
  const auto k = static_cast<Eigen::Index>(indices.size());
  Eigen::MatrixXd sub(k, k);
  std::vector<std::string> sub_ids;
  sub_ids.reserve(indices.size());
  for (Eigen::Index a = 0; a < k; ++a) {
    sub_ids.push_back(ids_.at(indices[a]));
    for (Eigen::Index b = 0; b < k; ++b) {
      sub(a, b) = values_(static_cast<Eigen::Index>(indices[a]),
                          static_cast<Eigen::Index>(indices[b]));
    }
  }
  return CorrelationMatrix(std::move(sub_ids), std::move(sub), ridge_epsilon_);
}

CorrelationMatrix CorrelationMatrix::select(const std::vector<std::string>& ids) const {
  std::vector<std::size_t> indices;
  indices.reserve(ids.size());
  for (const auto& id : ids) {
    auto i = index_of(id);
    if (!i) throw Error(ErrorCode::kInvalidInput, "unknown variant id: " + id);
    indices.push_back(*i);
  }
  return subset(indices);
}

CorrelationMatrix CorrelationMatrix::identity(std::vector<std::string> ids) {
  const auto n = static_cast<Eigen::Index>(ids.size());
  return CorrelationMatrix(std::move(ids), Eigen::MatrixXd::Identity(n, n));
}

CorrelationMatrix CorrelationMatrix::with_ridge(double epsilon) const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw Error(ErrorCode::kInvalidInput, "ridge epsilon must be positive");
  }
  Eigen::MatrixXd adjusted = values_;
  adjusted.diagonal().array() += epsilon;
  return CorrelationMatrix(ids_, std::move(adjusted), ridge_epsilon_ + epsilon);
}

// ---------------------------------------------------------------------------
// Alignment and harmonization

AlignedPair align(const SummarySet& summary, const CorrelationMatrix& corr) {
  std::vector<std::size_t> summary_keep;
  std::vector<std::size_t> corr_keep;
  std::vector<std::string> dropped;
  for (std::size_t i = 0; i < summary.size(); ++i) {
    if (auto j = corr.index_of(summary[i].variant_id)) {
      summary_keep.push_back(i);
      corr_keep.push_back(*j);
    } else {
      dropped.push_back(summary[i].variant_id);
    }
  }
  for (const auto& id : corr.ids()) {
    if (!summary.index_of(id)) dropped.push_back(id);
  }
  if (summary_keep.empty()) {
    throw Error(ErrorCode::kEmptyIntersection,
                "summary statistics and correlation matrix share no variants");
  }
  return AlignedPair{summary.subset(summary_keep), corr.subset(corr_keep), std::move(dropped)};
}

bool is_palindromic(const std::string& a1, const std::string& a2) {
  const std::string x = upper(a1);
  const std::string y = upper(a2);
  return (x == "A" && y == "T") || (x == "T" && y == "A") || (x == "C" && y == "G") ||
         (x == "G" && y == "C");
}

HarmonizeResult harmonize(const SummarySet& summary,
                          const std::unordered_map<std::string, AllelePair>& panel_alleles,
                          const HarmonizeOptions& options) {
  std::vector<VariantSummary> kept;
  std::vector<std::string> flipped, ambiguous, mismatched;
  for (const auto& v : summary.variants()) {
    auto it = panel_alleles.find(v.variant_id);
    if (it == panel_alleles.end()) {
      kept.push_back(v);
      continue;
    }
    if (options.drop_palindromic && is_palindromic(v.effect_allele, v.other_allele)) {
      ambiguous.push_back(v.variant_id);
      continue;
    }
    const std::string ea = upper(v.effect_allele), oa = upper(v.other_allele);
    const std::string pe = upper(it->second.effect_allele), po = upper(it->second.other_allele);
    if (ea == pe && oa == po) {
      kept.push_back(v);
    } else if (ea == po && oa == pe) {
      VariantSummary f = v;
      f.beta_x = -v.beta_x;
      f.beta_y = -v.beta_y;
      std::swap(f.effect_allele, f.other_allele);
      kept.push_back(std::move(f));
      flipped.push_back(v.variant_id);
    } else {
      mismatched.push_back(v.variant_id);
    }
  }
  if (kept.empty()) {
    throw Error(ErrorCode::kEmptyIntersection, "no variants left after allele harmonization");
  }
  return HarmonizeResult{SummarySet(std::move(kept), summary.source_meta()), std::move(flipped),
                         std::move(ambiguous), std::move(mismatched)};
}

// ---------------------------------------------------------------------------
// Weighting matrices

WeightMatrix build_omega(const SummarySet& summary, const CorrelationMatrix& corr) {
  require_aligned(summary, corr);
  return WeightMatrix{scaled(summary.se_y(), corr), WeightKind::kOmega};
}

WeightMatrix build_omega_x(const SummarySet& summary, const CorrelationMatrix& corr) {
  require_aligned(summary, corr);
  return WeightMatrix{scaled(summary.se_x(), corr), WeightKind::kOmegaX};
}

WeightMatrix build_psi(const SummarySet& summary, const CorrelationMatrix& corr) {
  require_aligned(summary, corr);
  const Eigen::VectorXd d = summary.beta_x().cwiseQuotient(summary.se_y());
  return WeightMatrix{scaled(d, corr), WeightKind::kPsi};
}

// ---------------------------------------------------------------------------
// Reference panel

Eigen::MatrixXd pearson_from_centred(const Eigen::MatrixXd& centred) {
  const Eigen::MatrixXd cross = centred.transpose() * centred;
  const Eigen::Index k = cross.rows();
  Eigen::MatrixXd rho(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      // Identical columns give exactly 1: c / sqrt(c * c) == 1 in IEEE arithmetic.
      rho(i, j) = std::clamp(cross(i, j) / std::sqrt(cross(i, i) * cross(j, j)), -1.0, 1.0);
    }
  }
  return rho;
}

std::unordered_map<std::string, AllelePair> GenotypePanel::allele_map() const {
  std::unordered_map<std::string, AllelePair> out;
  for (std::size_t j = 0; j < variant_ids.size() && j < alleles.size(); ++j) {
    out.emplace(variant_ids[j], alleles[j]);
  }
  return out;
}

PanelCorrelation panel_correlation(const GenotypePanel& panel) {
  const Eigen::Index n = panel.dosages.rows();
  const Eigen::Index m = panel.dosages.cols();
  if (static_cast<std::size_t>(m) != panel.variant_ids.size()) {
    throw Error(ErrorCode::kInvalidInput, "panel column count does not match its variant ids");
  }
  std::vector<Eigen::Index> keep;
  std::vector<std::string> monomorphic;
  for (Eigen::Index j = 0; j < m; ++j) {
    const auto col = panel.dosages.col(j);
    if (n < 2 || (col.array() == col(0)).all()) {
      monomorphic.push_back(panel.variant_ids[j]);
    } else {
      keep.push_back(j);
    }
  }
  if (keep.empty()) {
    throw Error(ErrorCode::kMonomorphicPanel, "every panel variant is monomorphic");
  }
  const auto k = static_cast<Eigen::Index>(keep.size());
  Eigen::MatrixXd centred(n, k);
  std::vector<std::string> ids;
  ids.reserve(keep.size());
  for (Eigen::Index c = 0; c < k; ++c) {
    const auto col = panel.dosages.col(keep[c]);
    centred.col(c) = col.array() - col.mean();
    ids.push_back(panel.variant_ids[keep[c]]);
  }
  return PanelCorrelation{CorrelationMatrix(std::move(ids), pearson_from_centred(centred)),
                          std::move(monomorphic)};
}

}  // namespace mrld
