#include "mrld/simulation.hpp"

#include "mrld/digest.hpp"
#include "mrld/error.hpp"
#include "mrld/io.hpp"
#include "mrld/stats.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

namespace mrld {

std::string design_name(Design design) {
  switch (design) {
    case Design::kSubsetResample: return "subset_resample";
    case Design::kBootstrapCorrelation: return "bootstrap_correlation";
    case Design::kDirectMvn: return "direct_mvn";
  }
  return "unknown";
}

Design parse_design(const std::string& name) {
  if (name == "subset_resample") return Design::kSubsetResample;
  if (name == "bootstrap_correlation") return Design::kBootstrapCorrelation;
  if (name == "direct_mvn") return Design::kDirectMvn;
  throw Error(ErrorCode::kParse, "unknown simulation design: " + name);
}

std::string SelectionSpec::label() const {
  switch (kind) {
    case Kind::kNone: return "all";
    case Kind::kPrune: return "prune_rho=" + format_double(parameter);
    case Kind::kConditional: return "conditional_p=" + format_double(parameter);
    case Kind::kPca: return "pca_var=" + format_double(parameter);
  }
  return "unknown";
}

std::mt19937_64 iteration_engine(std::uint64_t seed, std::uint64_t iteration) {
  // SplitMix64 finalizer applied to a Weyl sequence position.
  std::uint64_t z = seed + (iteration + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return std::mt19937_64(z);
}

std::string config_hash(const ExperimentConfig& config) {
  std::ostringstream os;
  os << "design=" << design_name(config.design) << '\n'
     << "iterations=" << config.iterations << '\n'
     << "seed=" << config.seed << '\n'
     << "causal_effect=" << format_double(config.causal_effect) << '\n'
     << "rounding=" << (config.rounding_decimals ? std::to_string(*config.rounding_decimals) : "-")
     << '\n'
     << "subset_size=" << config.subset_size << '\n'
     << "sample_size=" << (config.sample_size ? format_double(*config.sample_size) : "-") << '\n';
  for (const auto& spec : config.selection_specs) os << "spec=" << spec.label() << '\n';
  write_summary_tsv(os, config.base_summary);
  write_correlation_tsv(os, config.base_corr);
  if (config.reference_panel) write_panel_tsv(os, *config.reference_panel);
  return sha256_hex(os.str());
}

// ---------------------------------------------------------------------------

Eigen::MatrixXd simulate_genotypes(std::size_t n, const std::vector<Haplotype>& haplotypes,
                                   std::mt19937_64& rng) {
  if (haplotypes.empty()) throw Error(ErrorCode::kInvalidInput, "no haplotypes given");
  const std::size_t j = haplotypes.front().alleles.size();
  double total = 0.0;
  std::vector<double> weights;
  for (const auto& h : haplotypes) {
    if (h.alleles.size() != j) {
      throw Error(ErrorCode::kInvalidInput, "haplotypes have different lengths");
    }
    if (!(h.frequency > 0.0)) {
      throw Error(ErrorCode::kInvalidInput, "haplotype frequencies must be positive");
    }
    total += h.frequency;
    weights.push_back(h.frequency);
  }
  if (std::fabs(total - 1.0) > 1e-9) {
    throw Error(ErrorCode::kInvalidInput, "haplotype frequencies must sum to 1");
  }
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  Eigen::MatrixXd g(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(j));
  for (Eigen::Index i = 0; i < g.rows(); ++i) {
    const auto& a = haplotypes[pick(rng)].alleles;
    const auto& b = haplotypes[pick(rng)].alleles;
    for (Eigen::Index c = 0; c < g.cols(); ++c) {
      g(i, c) = a[static_cast<std::size_t>(c)] + b[static_cast<std::size_t>(c)];
    }
  }
  return g;
}

namespace {

// Digits after the decimal point in the shortest round-trip form of x.
int fractional_digits(double x) {
  if (x == 0.0 || !std::isfinite(x)) return 0;
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::scientific);
  const std::string_view text(buf, static_cast<std::size_t>(res.ptr - buf));
  const auto e = text.find('e');
  int mantissa_digits = 0;
  for (char c : text.substr(0, e)) mantissa_digits += (c >= '0' && c <= '9') ? 1 : 0;
  const int exponent = std::stoi(std::string(text.substr(e + 1)));
  return std::max(0, mantissa_digits - 1 - exponent);
}

}  // namespace

RoundedSummary round_summaries(const SummarySet& summary, int decimals) {
  if (decimals < 0) throw Error(ErrorCode::kInvalidInput, "decimals must be non-negative");
  const double factor = std::pow(10.0, decimals);
  const auto round_to = [factor, decimals](double x) {
    if (fractional_digits(x) <= decimals) return x;
    return std::round(x * factor) / factor;
  };
  std::vector<VariantSummary> kept;
  RoundedSummary out;
  for (const auto& v : summary.variants()) {
    VariantSummary r = v;
    r.beta_x = round_to(v.beta_x);
    r.se_x = round_to(v.se_x);
    r.beta_y = round_to(v.beta_y);
    r.se_y = round_to(v.se_y);
    if (r.se_x == 0.0 || r.se_y == 0.0) {
      out.excluded.push_back(v.variant_id);
    } else {
      kept.push_back(std::move(r));
    }
  }
  if (!kept.empty()) out.summary.emplace(std::move(kept), summary.source_meta());
  return out;
}

CovarianceFactor covariance_factor(const Eigen::MatrixXd& covariance) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(covariance);
  if (eig.info() != Eigen::Success || !eig.eigenvalues().allFinite()) {
    throw Error(ErrorCode::kNonFiniteEigenvalue, "eigendecomposition of covariance failed");
  }
  const Eigen::VectorXd& lambda = eig.eigenvalues();
  const double top = lambda.maxCoeff();
  if (!(top > 0.0) || lambda.minCoeff() < -1e-8 * top) {
    throw Error(ErrorCode::kNotPsd, "covariance matrix is not positive semi-definite");
  }
  const double floor = 1e-10 * top;
  CovarianceFactor out;
  out.floored = (lambda.array() < floor).any();
  const Eigen::VectorXd root = lambda.cwiseMax(floor).cwiseSqrt();
  out.factor = eig.eigenvectors() * root.asDiagonal();
  return out;
}

SpecOutcome evaluate_spec(const SelectionSpec& spec, const SummarySet& summary,
                          const CorrelationMatrix& corr, std::optional<double> sample_size) {
  SpecOutcome out;
  try {
    switch (spec.kind) {
      case SelectionSpec::Kind::kNone:
        out.estimate = ivw_correlated(summary, corr);
        out.n_selected = static_cast<int>(summary.size());
        break;
      case SelectionSpec::Kind::kPrune: {
        const SelectionResult sel = prune(summary, corr, spec.parameter);
        out.n_selected = static_cast<int>(sel.selected_ids.size());
        out.estimate =
            ivw_correlated(summary.select(sel.selected_ids), corr.select(sel.selected_ids));
        break;
      }
      case SelectionSpec::Kind::kConditional: {
        ConditionalOptions opts;
        opts.sample_size = sample_size;
        const SelectionResult sel = stepwise_conditional(summary, corr, spec.parameter, opts);
        out.n_selected = static_cast<int>(sel.selected_ids.size());
        if (sel.selected_ids.empty()) {
          out.failure = std::string(error_code_name(ErrorCode::kEmptySelection));
          return out;
        }
        out.estimate =
            ivw_correlated(summary.select(sel.selected_ids), corr.select(sel.selected_ids));
        break;
      }
      case SelectionSpec::Kind::kPca: {
        PcaIvwResult r = pca_ivw(summary, corr, spec.parameter);
        out.n_selected = r.components.k;
        out.estimate = std::move(r.estimate);
        break;
      }
    }
    if (out.estimate && !out.estimate->se_defined()) out.failure = warning::kNegVariance;
  } catch (const Error& e) {
    out.estimate.reset();
    out.failure = std::string(error_code_name(e.code()));
  }
  return out;
}

namespace {

using IterationFn =
    std::function<std::vector<IterationRecord>(std::size_t iteration, std::mt19937_64& rng)>;

// Runs all iterations, possibly across threads; slot i always holds iteration i.
std::vector<std::vector<IterationRecord>> run_iterations(const ExperimentConfig& config,
                                                         const IterationFn& fn) {
  std::vector<std::vector<IterationRecord>> slots(config.iterations);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= config.iterations) return;
      try {
        auto rng = iteration_engine(config.seed, i);
        slots[i] = fn(i, rng);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(config.iterations);
        return;
      }
    }
  };
  const unsigned threads = std::max(1u, config.threads);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return slots;
}

std::vector<IterationRecord> evaluate_all(const ExperimentConfig& config, std::size_t iteration,
                                          const SummarySet& summary,
                                          const CorrelationMatrix& corr) {
  std::vector<IterationRecord> records;
  records.reserve(config.selection_specs.size());
  for (const auto& spec : config.selection_specs) {
    SpecOutcome o = evaluate_spec(spec, summary, corr, config.sample_size);
    IterationRecord r;
    r.iteration = iteration;
    r.n_selected = o.n_selected;
    r.failure = o.failure;
    if (o.estimate) {
      r.estimate = o.estimate->estimate;
      r.se = o.estimate->se_fixed;
      if (r.se) r.rejected = std::fabs(*r.estimate) > kNormal975 * *r.se;
    }
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<IterationRecord> all_failed(const ExperimentConfig& config, std::size_t iteration,
                                        const std::string& code) {
  std::vector<IterationRecord> records(config.selection_specs.size());
  for (auto& r : records) {
    r.iteration = iteration;
    r.failure = code;
  }
  return records;
}

ExperimentResult aggregate(const ExperimentConfig& config,
                           std::vector<std::vector<IterationRecord>> slots,
                           std::vector<std::string> warnings) {
  ExperimentResult result;
  result.design = config.design;
  result.seed = config.seed;
  result.config_hash = config_hash(config);
  result.iterations = config.iterations;
  result.warnings = std::move(warnings);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t s = 0; s < config.selection_specs.size(); ++s) {
    SpecResult spec;
    spec.label = config.selection_specs[s].label();
    spec.iterations = config.iterations;
    std::vector<double> estimates;
    CompensatedSum se_sum;
    std::size_t se_count = 0;
    std::size_t rejections = 0;
    for (auto& slot : slots) {
      IterationRecord& r = slot[s];
      if (r.estimate) {
        estimates.push_back(*r.estimate);
      } else {
        ++spec.failed_count;
      }
      if (r.se) {
        se_sum.add(*r.se);
        ++se_count;
      } else {
        ++spec.undefined_se_count;
      }
      if (r.rejected) ++rejections;
      if (config.keep_records) spec.records.push_back(std::move(r));
    }
    if (!estimates.empty()) {
      spec.mean_estimate = compensated_sum(estimates) / static_cast<double>(estimates.size());
    } else {
      spec.mean_estimate = nan;
    }
    if (estimates.size() >= 2) {
      CompensatedSum ss;
      for (double e : estimates) ss.add((e - spec.mean_estimate) * (e - spec.mean_estimate));
      spec.sd_estimate = std::sqrt(ss.value() / static_cast<double>(estimates.size() - 1));
    } else {
      spec.sd_estimate = nan;
    }
    spec.mean_se = se_count > 0 ? se_sum.value() / static_cast<double>(se_count) : nan;
    spec.empirical_power =
        static_cast<double>(rejections) / static_cast<double>(std::max<std::size_t>(1, config.iterations));
    result.specs.push_back(std::move(spec));
  }
  return result;
}

void require_iterations(const ExperimentConfig& config) {
  if (config.iterations < 1) throw Error(ErrorCode::kInvalidInput, "iterations must be >= 1");
  if (config.selection_specs.empty()) {
    throw Error(ErrorCode::kInvalidInput, "at least one selection spec is required");
  }
}

AlignedPair aligned_base(const ExperimentConfig& config, std::vector<std::string>& warnings) {
  AlignedPair base = align(config.base_summary, config.base_corr);
  if (!base.dropped.empty()) {
    std::string ids;
    for (const auto& id : base.dropped) ids += (ids.empty() ? "" : ",") + id;
    warnings.push_back("dropped during alignment: " + ids);
  }
  return base;
}

// Applies optional rounding, then evaluates every spec.
std::vector<IterationRecord> analyse(const ExperimentConfig& config, std::size_t iteration,
                                     const SummarySet& summary, const CorrelationMatrix& corr) {
  if (!config.rounding_decimals) return evaluate_all(config, iteration, summary, corr);
  RoundedSummary rounded = round_summaries(summary, *config.rounding_decimals);
  if (!rounded.summary) return all_failed(config, iteration, "ALL_EXCLUDED");
  if (rounded.excluded.empty()) return evaluate_all(config, iteration, *rounded.summary, corr);
  return evaluate_all(config, iteration, *rounded.summary, corr.select(rounded.summary->ids()));
}

}  // namespace

ExperimentResult subset_resample(const ExperimentConfig& config) {
  require_iterations(config);
  std::vector<std::string> warnings;
  const AlignedPair base = aligned_base(config, warnings);
  const std::size_t total = base.summary.size();
  const std::size_t m = config.subset_size;
  if (m < 1 || m > total) {
    throw Error(ErrorCode::kInvalidInput, "subset size must lie in [1, number of variants]");
  }
  std::vector<std::size_t> all(total);
  std::iota(all.begin(), all.end(), std::size_t{0});
  auto slots = run_iterations(config, [&](std::size_t i, std::mt19937_64& rng) {
    std::vector<std::size_t> pick;
    pick.reserve(m);
    std::sample(all.begin(), all.end(), std::back_inserter(pick), m, rng);
    return analyse(config, i, base.summary.subset(pick), base.corr.subset(pick));
  });
  return aggregate(config, std::move(slots), std::move(warnings));
}

ExperimentResult bootstrap_correlation(const ExperimentConfig& config) {
  require_iterations(config);
  if (!config.reference_panel) {
    throw Error(ErrorCode::kInvalidInput, "bootstrap design needs a reference panel");
  }
  const GenotypePanel& panel = *config.reference_panel;
  const Eigen::Index n = panel.dosages.rows();
  if (n < 2) throw Error(ErrorCode::kInvalidInput, "reference panel needs at least 2 rows");
  std::vector<std::string> warnings;
  auto slots = run_iterations(config, [&](std::size_t i, std::mt19937_64& rng) {
    std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
    GenotypePanel boot{panel.variant_ids, panel.alleles,
                       Eigen::MatrixXd(n, panel.dosages.cols())};
    for (Eigen::Index r = 0; r < n; ++r) boot.dosages.row(r) = panel.dosages.row(pick(rng));
    std::optional<PanelCorrelation> pc;
    try {
      pc = panel_correlation(boot);
    } catch (const Error& e) {
      return all_failed(config, i, std::string(error_code_name(e.code())));
    }
    try {
      const AlignedPair ap = align(config.base_summary, pc->corr);
      return analyse(config, i, ap.summary, ap.corr);
    } catch (const Error& e) {
      return all_failed(config, i, std::string(error_code_name(e.code())));
    }
  });
  return aggregate(config, std::move(slots), std::move(warnings));
}

ExperimentResult direct_mvn(const ExperimentConfig& config) {
  require_iterations(config);
  std::vector<std::string> warnings;
  const AlignedPair base = aligned_base(config, warnings);
  const CovarianceFactor cf = covariance_factor(base.corr.values());
  if (cf.floored) warnings.push_back(warning::kDegenerateCovariance);
  const Eigen::VectorXd bx0 = base.summary.beta_x();
  const Eigen::VectorXd se_x = base.summary.se_x();
  const Eigen::VectorXd se_y = base.summary.se_y();
  const Eigen::Index j = bx0.size();
  auto slots = run_iterations(config, [&](std::size_t i, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd zx(j), zy(j);
    for (Eigen::Index c = 0; c < j; ++c) zx[c] = normal(rng);
    for (Eigen::Index c = 0; c < j; ++c) zy[c] = normal(rng);
    const Eigen::VectorXd bx = bx0 + se_x.cwiseProduct(cf.factor * zx);
    const Eigen::VectorXd by = config.causal_effect * bx0 + se_y.cwiseProduct(cf.factor * zy);
    std::vector<VariantSummary> vs = base.summary.variants();
    for (Eigen::Index c = 0; c < j; ++c) {
      vs[static_cast<std::size_t>(c)].beta_x = bx[c];
      vs[static_cast<std::size_t>(c)].beta_y = by[c];
    }
    return analyse(config, i, SummarySet(std::move(vs), base.summary.source_meta()), base.corr);
  });
  return aggregate(config, std::move(slots), std::move(warnings));
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  switch (config.design) {
    case Design::kSubsetResample: return subset_resample(config);
    case Design::kBootstrapCorrelation: return bootstrap_correlation(config);
    case Design::kDirectMvn: return direct_mvn(config);
  }
  throw Error(ErrorCode::kInvalidInput, "unknown design");
}

}  // namespace mrld
