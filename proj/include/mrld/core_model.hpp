// Data model for summarized genetic associations and genetic correlation
// matrices, plus the weighting matrices built from them.
//
// All types are immutable once constructed; every operation in this header is
// a pure function of its arguments.
#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace mrld {

struct VariantSummary {
  std::string variant_id;
  std::string effect_allele;
  std::string other_allele;
  double beta_x = 0.0;  // risk-factor units per effect allele
  double se_x = 1.0;
  double beta_y = 0.0;  // outcome units (or log odds) per effect allele
  double se_y = 1.0;
  std::optional<double> maf;
  std::optional<double> n_x;
  std::optional<double> n_y;
};

// Ordered, id-unique collection of variant summaries.
class SummarySet {
 public:
  using Meta = std::map<std::string, std::string>;

  explicit SummarySet(std::vector<VariantSummary> variants, Meta source_meta = {});

  std::size_t size() const { return variants_.size(); }
  const std::vector<VariantSummary>& variants() const { return variants_; }
  const VariantSummary& operator[](std::size_t i) const { return variants_[i]; }
  const Meta& source_meta() const { return meta_; }

  std::vector<std::string> ids() const;
  std::optional<std::size_t> index_of(const std::string& id) const;

  Eigen::VectorXd beta_x() const;
  Eigen::VectorXd se_x() const;
  Eigen::VectorXd beta_y() const;
  Eigen::VectorXd se_y() const;

  // Variants at the given positions, in the given order.
  SummarySet subset(const std::vector<std::size_t>& indices) const;
  // Variants with the given ids, in the given order. Unknown ids throw.
  SummarySet select(const std::vector<std::string>& ids) const;

 private:
  std::vector<VariantSummary> variants_;
  Meta meta_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Signed pairwise genetic correlations with unit diagonal. A ridge-adjusted
// matrix carries diagonal 1 + epsilon and reports it through ridge_epsilon().
class CorrelationMatrix {
 public:
  static constexpr double kSymmetryTolerance = 1e-10;

  CorrelationMatrix(std::vector<std::string> ids, Eigen::MatrixXd values);

  std::size_t size() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }
  const Eigen::MatrixXd& values() const { return values_; }
  double operator()(std::size_t i, std::size_t j) const { return values_(i, j); }

  std::optional<std::size_t> index_of(const std::string& id) const;

  CorrelationMatrix subset(const std::vector<std::size_t>& indices) const;
  CorrelationMatrix select(const std::vector<std::string>& ids) const;

  bool is_ridge_adjusted() const { return ridge_epsilon_ > 0.0; }
  double ridge_epsilon() const { return ridge_epsilon_; }

  static CorrelationMatrix identity(std::vector<std::string> ids);

  // Copy with epsilon added to the diagonal; the unit-diagonal invariant is
  // waived for the result. Use diagnostics' ridge_adjust() in client code.
  CorrelationMatrix with_ridge(double epsilon) const;

 private:
  CorrelationMatrix(std::vector<std::string> ids, Eigen::MatrixXd values, double ridge_epsilon);

  std::vector<std::string> ids_;
  Eigen::MatrixXd values_;
  double ridge_epsilon_ = 0.0;
  std::unordered_map<std::string, std::size_t> index_;
};

enum class WeightKind { kOmega, kOmegaX, kPsi };

struct WeightMatrix {
  Eigen::MatrixXd values;
  WeightKind kind;
};

struct AlignedPair {
  SummarySet summary;
  CorrelationMatrix corr;
  std::vector<std::string> dropped;  // ids present on only one side
};

// Restricts both inputs to their common variants, ordered as in `summary`.
// Throws ErrorCode::kEmptyIntersection when nothing is shared.
AlignedPair align(const SummarySet& summary, const CorrelationMatrix& corr);

struct AllelePair {
  std::string effect_allele;
  std::string other_allele;
};

struct HarmonizeOptions {
  bool drop_palindromic = true;
};

struct HarmonizeResult {
  SummarySet summary;
  std::vector<std::string> flipped;
  std::vector<std::string> ambiguous;   // palindromic, dropped
  std::vector<std::string> mismatched;  // neither orientation matches, dropped
};

// Orients every variant to the panel's effect allele. Variants the panel does
// not know are passed through unchanged (align() drops them later).
HarmonizeResult harmonize(const SummarySet& summary,
                          const std::unordered_map<std::string, AllelePair>& panel_alleles,
                          const HarmonizeOptions& options = {});

bool is_palindromic(const std::string& a1, const std::string& a2);

// Omega(j1, j2) = se_y(j1) se_y(j2) rho(j1, j2).
WeightMatrix build_omega(const SummarySet& summary, const CorrelationMatrix& corr);
// Same construction with se_x; the sampling covariance of beta_x.
WeightMatrix build_omega_x(const SummarySet& summary, const CorrelationMatrix& corr);
// Psi(j1, j2) = beta_x(j1) beta_x(j2) rho(j1, j2) / (se_y(j1) se_y(j2)).
WeightMatrix build_psi(const SummarySet& summary, const CorrelationMatrix& corr);

// Reference genotype panel: rows are individuals, columns variants.
struct GenotypePanel {
  std::vector<std::string> variant_ids;
  std::vector<AllelePair> alleles;
  Eigen::MatrixXd dosages;

  std::unordered_map<std::string, AllelePair> allele_map() const;
};

struct PanelCorrelation {
  CorrelationMatrix corr;
  std::vector<std::string> monomorphic;  // excluded columns
};

// Pearson correlation matrix of already-centred columns (no zero columns).
Eigen::MatrixXd pearson_from_centred(const Eigen::MatrixXd& centred);

// Pearson correlations of the panel columns. Columns without variation are
// excluded and named; throws kMonomorphicPanel if fewer than one column remains.
PanelCorrelation panel_correlation(const GenotypePanel& panel);

}  // namespace mrld
