#include "mrld/selection.hpp"

#include "mrld/error.hpp"
#include "mrld/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace mrld {

std::string selection_method_name(SelectionMethod method) {
  switch (method) {
    case SelectionMethod::kPruning: return "prune";
    case SelectionMethod::kConditional: return "conditional";
    case SelectionMethod::kPca: return "pca";
  }
  return "unknown";
}

SelectionMethod parse_selection_method(const std::string& name) {
  if (name == "prune") return SelectionMethod::kPruning;
  if (name == "conditional") return SelectionMethod::kConditional;
  if (name == "pca") return SelectionMethod::kPca;
  throw Error(ErrorCode::kParse, "unknown selection method: " + name);
}

namespace {

// Strength order: larger |z| first, ties by variant id. |z| ranks exactly as
// the two-sided p-value but does not underflow for very strong signals.
bool stronger(double abs_z_a, const std::string& id_a, double abs_z_b, const std::string& id_b) {
  if (abs_z_a != abs_z_b) return abs_z_a > abs_z_b;
  return id_a < id_b;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : ",") + s;
  return out;
}

double resolve_sample_size(const SummarySet& summary, const ConditionalOptions& options) {
  if (options.sample_size) return *options.sample_size;
  std::vector<double> ns;
  for (const auto& v : summary.variants()) {
    if (v.n_x) ns.push_back(*v.n_x);
  }
  if (ns.empty()) {
    throw Error(ErrorCode::kMissingSampleSize,
                "conditional selection needs a sample size (n_x column or explicit option)");
  }
  std::sort(ns.begin(), ns.end());
  const std::size_t m = ns.size();
  return m % 2 == 1 ? ns[m / 2] : 0.5 * (ns[m / 2 - 1] + ns[m / 2]);
}

Eigen::MatrixXd block(const CorrelationMatrix& corr, const std::vector<std::size_t>& idx) {
  const auto k = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd out(k, k);
  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index b = 0; b < k; ++b) {
      out(a, b) = corr(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]);
    }
  }
  return out;
}

bool passes_condition_gate(const Eigen::MatrixXd& r, double max_condition) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(r, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  return lo > 0.0 && hi / lo < max_condition;
}

}  // namespace

Eigen::VectorXd marginal_p_values(const SummarySet& summary) {
  Eigen::VectorXd p(summary.size());
  for (std::size_t j = 0; j < summary.size(); ++j) {
    p[static_cast<Eigen::Index>(j)] = two_sided_p(summary[j].beta_x / summary[j].se_x);
  }
  return p;
}

SelectionResult prune(const SummarySet& summary, const CorrelationMatrix& corr,
                      double rho_threshold) {
  if (!(rho_threshold >= 0.0 && rho_threshold <= 1.0)) {
    throw Error(ErrorCode::kInvalidInput, "pruning threshold must lie in [0, 1]");
  }
  if (summary.size() != corr.size()) {
    throw Error(ErrorCode::kInvalidInput, "summary and correlation matrix are not aligned");
  }
  const std::size_t n = summary.size();
  std::vector<double> abs_z(n);
  for (std::size_t j = 0; j < n; ++j) abs_z[j] = std::fabs(summary[j].beta_x / summary[j].se_x);

  SelectionResult result;
  result.method = SelectionMethod::kPruning;
  result.parameters["rho_threshold"] = rho_threshold;
  std::vector<bool> remaining(n, true);
  std::size_t left = n;
  int step = 0;
  while (left > 0) {
    std::size_t best = n;
    for (std::size_t j = 0; j < n; ++j) {
      if (!remaining[j]) continue;
      if (best == n || stronger(abs_z[j], summary[j].variant_id, abs_z[best],
                                summary[best].variant_id)) {
        best = j;
      }
    }
    remaining[best] = false;
    --left;
    SelectionStep s;
    s.step = ++step;
    s.chosen_id = summary[best].variant_id;
    s.statistic = two_sided_p(abs_z[best]);
    for (std::size_t j = 0; j < n; ++j) {
      if (remaining[j] && std::fabs(corr(best, j)) > rho_threshold) {
        remaining[j] = false;
        --left;
        s.removed.push_back(summary[j].variant_id);
      }
    }
    result.selected_ids.push_back(s.chosen_id);
    result.trace.push_back(std::move(s));
  }
  return result;
}

ConditionalAssociation conditional_association(const SummarySet& summary,
                                               const CorrelationMatrix& corr,
                                               const std::vector<std::size_t>& conditioned,
                                               std::size_t candidate, double sample_size,
                                               const ConditionalOptions& options) {
  std::vector<std::size_t> joint = conditioned;
  joint.push_back(candidate);
  const auto k = static_cast<Eigen::Index>(joint.size());
  const double df = sample_size - static_cast<double>(k) - 1.0;
  if (!(df > 0.0)) {
    throw Error(ErrorCode::kInvalidInput, "sample size too small for the joint model");
  }
  Eigen::VectorXd r(k);
  for (Eigen::Index a = 0; a < k; ++a) {
    const auto& v = summary[joint[static_cast<std::size_t>(a)]];
    const double z = v.beta_x / v.se_x;
    r[a] = z / std::sqrt(z * z + sample_size - 2.0);
  }
  const Eigen::MatrixXd rr = block(corr, joint);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(rr);
  const Eigen::VectorXd b = ldlt.solve(r);
  Eigen::VectorXd unit = Eigen::VectorXd::Zero(k);
  unit[k - 1] = 1.0;
  const double inv_diag = ldlt.solve(unit)[k - 1];
  const double sigma2 = std::max(1.0 - r.dot(b), options.residual_variance_floor);

  const auto& v = summary[candidate];
  const double z_marg = v.beta_x / v.se_x;
  const double scale = v.se_x * std::sqrt(z_marg * z_marg + sample_size - 2.0);
  const double se_std = std::sqrt(sigma2 * std::max(inv_diag, 0.0) / df);

  ConditionalAssociation out;
  out.beta = b[k - 1] * scale;
  out.se = se_std * scale;
  out.z = se_std > 0.0 ? b[k - 1] / se_std : 0.0;
  out.p = two_sided_p(out.z);
  return out;
}

SelectionResult stepwise_conditional(const SummarySet& summary, const CorrelationMatrix& corr,
                                     double p_threshold, const ConditionalOptions& options) {
  if (summary.size() != corr.size()) {
    throw Error(ErrorCode::kInvalidInput, "summary and correlation matrix are not aligned");
  }
  const double n = resolve_sample_size(summary, options);
  const std::size_t j_total = summary.size();

  SelectionResult result;
  result.method = SelectionMethod::kConditional;
  result.parameters["p_threshold"] = p_threshold;
  result.parameters["sample_size"] = n;

  std::vector<std::size_t> chosen;
  std::vector<bool> used(j_total, false);
  for (int step = 1; chosen.size() < j_total; ++step) {
    std::size_t best = j_total;
    ConditionalAssociation best_assoc;
    std::vector<std::string> skipped;
    for (std::size_t j = 0; j < j_total; ++j) {
      if (used[j]) continue;
      std::vector<std::size_t> joint = chosen;
      joint.push_back(j);
      if (!passes_condition_gate(block(corr, joint), options.max_condition_number)) {
        skipped.push_back(summary[j].variant_id);
        continue;
      }
      const ConditionalAssociation a =
          conditional_association(summary, corr, chosen, j, n, options);
      if (best == j_total || stronger(std::fabs(a.z), summary[j].variant_id,
                                      std::fabs(best_assoc.z), summary[best].variant_id)) {
        best = j;
        best_assoc = a;
      }
    }
    std::ostringstream note;
    if (!skipped.empty()) {
      note << "skipped (condition number >= " << options.max_condition_number
           << "): " << join(skipped);
    }
    if (best == j_total) {
      SelectionStep s;
      s.step = step;
      s.statistic = 1.0;
      s.note = (note.str().empty() ? std::string() : note.str() + "; ") +
               "no candidate can be evaluated";
      result.trace.push_back(std::move(s));
      break;
    }
    if (!(best_assoc.p < p_threshold)) {
      SelectionStep s;
      s.step = step;
      s.statistic = best_assoc.p;
      std::ostringstream stop;
      stop << "stop: smallest conditional p-value (" << summary[best].variant_id
           << ") is not below " << p_threshold;
      s.note = (note.str().empty() ? std::string() : note.str() + "; ") + stop.str();
      result.trace.push_back(std::move(s));
      break;
    }
    used[best] = true;
    chosen.push_back(best);
    SelectionStep s;
    s.step = step;
    s.chosen_id = summary[best].variant_id;
    s.statistic = best_assoc.p;
    s.note = note.str();
    result.selected_ids.push_back(s.chosen_id);
    result.trace.push_back(std::move(s));
  }
  return result;
}

PcaComponents pca_components(const WeightMatrix& psi, double variance_threshold) {
  if (!(variance_threshold > 0.0 && variance_threshold <= 1.0)) {
    throw Error(ErrorCode::kInvalidInput, "variance threshold must lie in (0, 1]");
  }
  const Eigen::MatrixXd& m = psi.values;
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw Error(ErrorCode::kInvalidInput, "Psi must be a non-empty square matrix");
  }
  if (!m.allFinite()) {
    throw Error(ErrorCode::kNonFiniteEigenvalue, "Psi has non-finite entries");
  }
  const Eigen::Index j = m.rows();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (m + m.transpose()));
  if (eig.info() != Eigen::Success || !eig.eigenvalues().allFinite()) {
    throw Error(ErrorCode::kNonFiniteEigenvalue, "eigendecomposition of Psi failed");
  }

  PcaComponents out;
  out.variance_threshold = variance_threshold;
  out.eigenvalues = eig.eigenvalues().reverse();
  Eigen::MatrixXd vectors = eig.eigenvectors().rowwise().reverse();
  for (Eigen::Index c = 0; c < j; ++c) {
    Eigen::Index arg = 0;
    vectors.col(c).cwiseAbs().maxCoeff(&arg);
    if (vectors(arg, c) < 0.0) vectors.col(c) = -vectors.col(c);
  }

  const double top = out.eigenvalues[0];
  if (out.eigenvalues[j - 1] < -1e-8 * std::fabs(top)) {
    out.warnings.push_back("NEGATIVE_EIGENVALUE");
  }
  const Eigen::VectorXd clamped = out.eigenvalues.cwiseMax(0.0);
  const double total = clamped.sum();
  if (!(total > 0.0)) {
    throw Error(ErrorCode::kUndefinedEstimate, "Psi has no positive eigenvalues");
  }
  out.shares = clamped / total;
  out.cumulative_shares.resize(j);
  double running = 0.0;
  out.k = static_cast<int>(j);
  bool found = false;
  for (Eigen::Index c = 0; c < j; ++c) {
    running += out.shares[c];
    out.cumulative_shares[c] = running;
    if (!found && running > variance_threshold) {
      out.k = static_cast<int>(c + 1);
      found = true;
    }
  }
  out.loadings = vectors.leftCols(out.k);
  return out;
}

SelectionResult pca_selection(const SummarySet& summary, const PcaComponents& components) {
  SelectionResult result;
  result.method = SelectionMethod::kPca;
  result.selected_ids = summary.ids();
  result.parameters["variance_threshold"] = components.variance_threshold;
  result.parameters["k"] = components.k;
  for (int c = 0; c < components.k; ++c) {
    SelectionStep s;
    s.step = c + 1;
    s.chosen_id = "PC" + std::to_string(c + 1);
    s.statistic = components.cumulative_shares[c];
    s.note = "cumulative share of Psi";
    result.trace.push_back(std::move(s));
  }
  return result;
}

}  // namespace mrld
