// Instrument selection: correlation pruning, stepwise conditional selection
// from summary statistics, and principal components of the weighted
// correlation matrix Psi.
#pragma once

#include "mrld/core_model.hpp"

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mrld {

enum class SelectionMethod { kPruning, kConditional, kPca };

std::string selection_method_name(SelectionMethod method);
SelectionMethod parse_selection_method(const std::string& name);

struct SelectionStep {
  int step = 0;
  std::string chosen_id;
  double statistic = 0.0;            // p-value of the chosen variant at this step
  std::vector<std::string> removed;  // pruning: dropped by this choice
  std::string note;

  bool operator==(const SelectionStep&) const = default;
};

struct SelectionResult {
  SelectionMethod method = SelectionMethod::kPruning;
  std::vector<std::string> selected_ids;  // selection order
  std::map<std::string, double> parameters;
  std::vector<SelectionStep> trace;

  bool operator==(const SelectionResult&) const = default;
};

// Marginal two-sided normal p-values from |beta_x / se_x|.
Eigen::VectorXd marginal_p_values(const SummarySet& summary);

// Greedy pruning: repeatedly keep the remaining variant with the smallest
// marginal p-value (ties by id) and discard remaining variants whose |rho|
// with it is strictly greater than rho_threshold.
SelectionResult prune(const SummarySet& summary, const CorrelationMatrix& corr,
                      double rho_threshold);

struct ConditionalOptions {
  // Effective sample size of the risk-factor associations; falls back to the
  // median n_x of the summary when absent.
  std::optional<double> sample_size;
  double max_condition_number = 1e8;
  double residual_variance_floor = 1e-6;
};

struct ConditionalAssociation {
  double beta = 0.0;  // allele scale
  double se = 0.0;
  double z = 0.0;
  double p = 1.0;
};

// Joint association of `candidate` given `conditioned` from marginal
// statistics: standardized marginal effects r_j = z_j / sqrt(z_j^2 + n - 2),
// joint effects R^-1 r, residual variance 1 - r'R^-1 r (floored), and
// var(b) = sigma^2 R^-1 / (n - |T| - 1). This is the multivariable regression
// on standardized data, written in terms of summary statistics.
ConditionalAssociation conditional_association(const SummarySet& summary,
                                               const CorrelationMatrix& corr,
                                               const std::vector<std::size_t>& conditioned,
                                               std::size_t candidate, double sample_size,
                                               const ConditionalOptions& options = {});

// Forward selection on conditional p-values until the smallest one reaches
// p_threshold. Candidates whose joint correlation block has condition number
// at or above the gate are skipped and noted in the trace.
SelectionResult stepwise_conditional(const SummarySet& summary, const CorrelationMatrix& corr,
                                     double p_threshold, const ConditionalOptions& options = {});

struct PcaComponents {
  int k = 0;
  Eigen::MatrixXd loadings;            // J x k, orthonormal columns
  Eigen::VectorXd eigenvalues;         // all J, descending
  Eigen::VectorXd shares;              // share of total (negatives counted as 0)
  Eigen::VectorXd cumulative_shares;
  double variance_threshold = 0.0;
  std::vector<std::string> warnings;
};

// Eigendecomposition of Psi; k is the first component count whose cumulative
// share strictly exceeds the threshold (J if none does).
PcaComponents pca_components(const WeightMatrix& psi, double variance_threshold);

SelectionResult pca_selection(const SummarySet& summary, const PcaComponents& components);

}  // namespace mrld
