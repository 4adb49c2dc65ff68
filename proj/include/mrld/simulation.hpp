// Monte-Carlo experiments around a base set of summary statistics:
//
//   * subset resampling - analyse random subsets of the variants;
//   * correlation bootstrap - recompute the correlation matrix from a
//     bootstrap sample of the reference panel;
//   * direct MVN - draw association estimates from their sampling
//     distribution, optionally rounding them before analysis.
//
// Every iteration gets its own generator seeded from (seed, iteration) with
// SplitMix64, so results do not depend on how iterations are scheduled across
// threads. Aggregates are accumulated in iteration order.
#pragma once

#include "mrld/core_model.hpp"
#include "mrld/estimators.hpp"
#include "mrld/selection.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace mrld {

enum class Design { kSubsetResample, kBootstrapCorrelation, kDirectMvn };

std::string design_name(Design design);
Design parse_design(const std::string& name);

struct SelectionSpec {
  enum class Kind { kNone, kPrune, kConditional, kPca };
  Kind kind = Kind::kNone;
  double parameter = 0.0;  // rho threshold, p-value threshold or variance share

  std::string label() const;
  static SelectionSpec none() { return {Kind::kNone, 0.0}; }
  static SelectionSpec prune(double rho) { return {Kind::kPrune, rho}; }
  static SelectionSpec conditional(double p) { return {Kind::kConditional, p}; }
  static SelectionSpec pca(double share) { return {Kind::kPca, share}; }
};

struct ExperimentConfig {
  Design design = Design::kDirectMvn;
  std::size_t iterations = 1000;
  std::uint64_t seed = 1;
  double causal_effect = 0.0;
  std::optional<int> rounding_decimals;
  std::vector<SelectionSpec> selection_specs;
  SummarySet base_summary;
  CorrelationMatrix base_corr;
  std::optional<GenotypePanel> reference_panel;
  std::size_t subset_size = 0;            // subset resampling only
  std::optional<double> sample_size;      // conditional selection
  unsigned threads = 1;
  bool keep_records = false;
};

struct IterationRecord {
  std::size_t iteration = 0;
  std::optional<double> estimate;
  std::optional<double> se;
  bool rejected = false;
  int n_selected = 0;
  std::string failure;  // error or warning code when the SE is undefined

  bool operator==(const IterationRecord&) const = default;
};

struct SpecResult {
  std::string label;
  double mean_estimate = 0.0;
  double sd_estimate = 0.0;
  double mean_se = 0.0;
  double empirical_power = 0.0;
  std::size_t undefined_se_count = 0;  // includes failed iterations
  std::size_t failed_count = 0;        // no estimate at all
  std::size_t iterations = 0;
  std::vector<IterationRecord> records;

  bool operator==(const SpecResult&) const = default;
};

struct ExperimentResult {
  Design design = Design::kDirectMvn;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::size_t iterations = 0;
  std::vector<SpecResult> specs;
  std::vector<std::string> warnings;

  bool operator==(const ExperimentResult&) const = default;
};

// Per-iteration generator: mt19937_64 seeded with SplitMix64(seed, iteration).
std::mt19937_64 iteration_engine(std::uint64_t seed, std::uint64_t iteration);

// SHA-256 over a canonical rendering of the configuration and its base data.
std::string config_hash(const ExperimentConfig& config);

ExperimentResult subset_resample(const ExperimentConfig& config);
ExperimentResult bootstrap_correlation(const ExperimentConfig& config);
ExperimentResult direct_mvn(const ExperimentConfig& config);
ExperimentResult run_experiment(const ExperimentConfig& config);

struct Haplotype {
  std::vector<int> alleles;  // 0/1 per variant
  double frequency = 0.0;
};

// Each individual carries two independently drawn haplotypes; the genotype is
// their sum (entries 0, 1 or 2). Returns an n x J matrix.
Eigen::MatrixXd simulate_genotypes(std::size_t n, const std::vector<Haplotype>& haplotypes,
                                   std::mt19937_64& rng);

struct RoundedSummary {
  std::optional<SummarySet> summary;  // empty when every variant was excluded
  std::vector<std::string> excluded;  // standard error rounded to zero
};

// Half-away-from-zero rounding of beta_x, se_x, beta_y and se_y.
RoundedSummary round_summaries(const SummarySet& summary, int decimals);

// Estimate for one selection spec on one dataset; used by every design.
struct SpecOutcome {
  std::optional<CausalEstimate> estimate;
  int n_selected = 0;
  std::string failure;
};
SpecOutcome evaluate_spec(const SelectionSpec& spec, const SummarySet& summary,
                          const CorrelationMatrix& corr, std::optional<double> sample_size);

// Factor A with A A' = rho after flooring eigenvalues at 1e-10 * lambda_max.
// Throws kNotPsd for eigenvalues below -1e-8 * lambda_max. `floored` reports
// whether any eigenvalue was raised.
struct CovarianceFactor {
  Eigen::MatrixXd factor;
  bool floored = false;
};
CovarianceFactor covariance_factor(const Eigen::MatrixXd& covariance);

}  // namespace mrld
