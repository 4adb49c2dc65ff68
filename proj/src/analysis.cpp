#include "mrld/analysis.hpp"

#include "mrld/digest.hpp"
#include "mrld/error.hpp"
#include "mrld/io.hpp"
#include "mrld/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace mrld {

using nlohmann::json;

namespace {

std::string join_ids(const std::vector<std::string>& ids) {
  std::string out;
  for (const auto& id : ids) out += (out.empty() ? "" : ",") + id;
  return out;
}

void add_unique(std::vector<std::string>& list, const std::string& item) {
  if (std::find(list.begin(), list.end(), item) == list.end()) list.push_back(item);
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string format_sci(double value) {
  if (!std::isfinite(value)) return std::isnan(value) ? "nan" : (value > 0 ? "inf" : "-inf");
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3e", value);
  return buf;
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s + " " : s + std::string(width - s.size(), ' ');
}

}  // namespace

std::string estimation_method_name(EstimationMethod method) {
  switch (method) {
    case EstimationMethod::kIvw: return "ivw";
    case EstimationMethod::kIvwCorrelated: return "ivw-corr";
    case EstimationMethod::kPcaIvw: return "pca-ivw";
    case EstimationMethod::kTwoStage: return "2sls";
  }
  return "unknown";
}

EstimationMethod parse_estimation_method(const std::string& name) {
  if (name == "ivw") return EstimationMethod::kIvw;
  if (name == "ivw-corr") return EstimationMethod::kIvwCorrelated;
  if (name == "pca-ivw") return EstimationMethod::kPcaIvw;
  if (name == "2sls") return EstimationMethod::kTwoStage;
  throw Error(ErrorCode::kParse, "unknown estimation method: " + name);
}

InputDigest digest_input(const std::string& role, const std::filesystem::path& path) {
  return InputDigest{role, path.filename().string(), sha256_file(path)};
}

PreparedInputs load_inputs(const LoadOptions& options) {
  if (!options.summary) throw Error(ErrorCode::kInvalidInput, "a summary statistics file is required");
  if (options.panel && options.correlation) {
    throw Error(ErrorCode::kInvalidInput, "give either a correlation matrix or a panel, not both");
  }
  std::vector<InputDigest> digests{digest_input("summary", *options.summary)};
  SummarySet summary = read_summary_tsv(*options.summary);
  std::vector<std::string> notes;
  std::optional<CorrelationMatrix> corr;

  if (options.panel) {
    digests.push_back(digest_input("panel", *options.panel));
    const GenotypePanel panel = read_panel_tsv(*options.panel);
    HarmonizeOptions hopts;
    hopts.drop_palindromic = !options.keep_palindromic;
    HarmonizeResult h = harmonize(summary, panel.allele_map(), hopts);
    if (!h.flipped.empty()) notes.push_back("flipped to panel orientation: " + join_ids(h.flipped));
    if (!h.ambiguous.empty()) notes.push_back("palindromic, dropped: " + join_ids(h.ambiguous));
    if (!h.mismatched.empty()) notes.push_back("alleles do not match panel, dropped: " + join_ids(h.mismatched));
    summary = std::move(h.summary);
    PanelCorrelation pc = panel_correlation(panel);
    if (!pc.monomorphic.empty()) {
      notes.push_back("monomorphic in the reference data: " + join_ids(pc.monomorphic));
    }
    corr = std::move(pc.corr);
  } else if (options.correlation) {
    digests.push_back(digest_input("correlation", *options.correlation));
    corr = read_correlation_tsv(*options.correlation);
  }

  if (corr) {
    AlignedPair a = align(summary, *corr);
    if (!a.dropped.empty()) notes.push_back("not present in both inputs, dropped: " + join_ids(a.dropped));
    summary = std::move(a.summary);
    corr = std::move(a.corr);
  }

  PreparedInputs out{summary, summary, corr, std::nullopt, {}, {}};
  if (options.selection) {
    digests.push_back(digest_input("selection", *options.selection));
    SelectionResult sel = read_selection_tsv(*options.selection);
    std::vector<std::string> keep, missing;
    for (const auto& id : sel.selected_ids) {
      (summary.index_of(id) ? keep : missing).push_back(id);
    }
    if (!missing.empty()) notes.push_back("selected but not available, ignored: " + join_ids(missing));
    if (keep.empty()) throw Error(ErrorCode::kEmptySelection, "no selected variant is available");
    out.summary = summary.select(keep);
    if (corr) out.corr = corr->select(keep);
    out.selection = std::move(sel);
  }
  out.notes = std::move(notes);
  out.digests = std::move(digests);
  return out;
}

std::optional<double> AnalysisReport::reported_se() const {
  return random_effects ? estimate.se_random : estimate.se_fixed;
}

AnalysisReport analyze(const PreparedInputs& inputs, const AnalysisOptions& options) {
  AnalysisReport report;
  report.method = options.method;
  report.random_effects = options.random_effects;
  report.instrument_ids = inputs.summary.ids();
  report.selection = inputs.selection;
  report.notes = inputs.notes;
  report.provenance.inputs = inputs.digests;

  const auto need_corr = [&]() -> CorrelationMatrix {
    if (!inputs.corr) {
      throw Error(ErrorCode::kInvalidInput,
                  estimation_method_name(options.method) + " needs a correlation matrix or panel");
    }
    if (!options.ridge) return *inputs.corr;
    report.ridge = ridge_sensitivity(inputs.summary, *inputs.corr, *options.ridge);
    add_unique(report.warnings, warning::kRidgeAdjusted);
    if (report.ridge->flagged) add_unique(report.warnings, warning::kRidgeSensitive);
    return ridge_adjust(*inputs.corr, *options.ridge);
  };

  switch (options.method) {
    case EstimationMethod::kIvw:
      report.estimate = ivw_uncorrelated(inputs.summary);
      break;
    case EstimationMethod::kIvwCorrelated:
      report.estimate = ivw_correlated(inputs.summary, need_corr());
      break;
    case EstimationMethod::kPcaIvw: {
      PcaIvwResult r = pca_ivw(inputs.summary, need_corr(), options.variance_threshold);
      report.estimate = std::move(r.estimate);
      for (const auto& w : r.components.warnings) add_unique(report.warnings, w);
      report.pca = std::move(r.components);
      break;
    }
    case EstimationMethod::kTwoStage:
      throw Error(ErrorCode::kInvalidInput, "2sls needs individual-level data");
  }
  for (const auto& w : report.estimate.diagnostics.warnings) add_unique(report.warnings, w);
  return report;
}

AnalysisReport analyze_individual(const IndividualData& data, const AnalysisOptions& options) {
  if (options.method != EstimationMethod::kTwoStage) {
    throw Error(ErrorCode::kInvalidInput, "individual-level data support only the 2sls method");
  }
  AnalysisReport report;
  report.method = options.method;
  report.random_effects = false;
  report.instrument_ids = data.variant_ids();
  report.estimate = two_stage_least_squares(data);
  for (const auto& w : report.estimate.diagnostics.warnings) add_unique(report.warnings, w);
  return report;
}

// ---------------------------------------------------------------------------
// JSON

json to_json(const DiagnosticsReport& r) {
  return json{{"determinant", r.determinant},
              {"log_abs_determinant", r.log_abs_determinant},
              {"determinant_sign", r.determinant_sign},
              {"condition_number", r.condition_number},
              {"max_abs_inverse_element", optional_number(r.max_abs_inverse_element)},
              {"min_eigenvalue", r.min_eigenvalue},
              {"singular", r.singular},
              {"variance_valid", r.variance_valid},
              {"warnings", r.warnings}};
}

json to_json(const SelectionResult& s) {
  json trace = json::array();
  for (const auto& step : s.trace) {
    trace.push_back(json{{"step", step.step},
                         {"variant_id", step.chosen_id},
                         {"statistic", step.statistic},
                         {"removed", step.removed},
                         {"note", step.note}});
  }
  return json{{"method", selection_method_name(s.method)},
              {"selected_ids", s.selected_ids},
              {"parameters", s.parameters},
              {"trace", trace}};
}

json to_json(const PcaComponents& c, const std::vector<std::string>& ids) {
  json loadings = json::object();
  for (Eigen::Index k = 0; k < c.loadings.cols(); ++k) {
    json column = json::object();
    for (Eigen::Index j = 0; j < c.loadings.rows(); ++j) {
      const std::string id = static_cast<std::size_t>(j) < ids.size()
                                 ? ids[static_cast<std::size_t>(j)]
                                 : "v" + std::to_string(j + 1);
      column[id] = c.loadings(j, k);
    }
    loadings["PC" + std::to_string(k + 1)] = column;
  }
  const auto vec = [](const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
  };
  return json{{"k", c.k},
              {"variance_threshold", c.variance_threshold},
              {"eigenvalues", vec(c.eigenvalues)},
              {"shares", vec(c.shares)},
              {"cumulative_shares", vec(c.cumulative_shares)},
              {"loadings", loadings},
              {"warnings", c.warnings}};
}

json to_json(const AnalysisReport& r) {
  const CausalEstimate& e = r.estimate;
  const auto se = r.reported_se();
  json est{{"estimate", e.estimate},
           {"se", optional_number(se)},
           {"se_fixed", optional_number(e.se_fixed)},
           {"se_random", optional_number(e.se_random)},
           {"residual_sigma", e.residual_sigma},
           {"n_instruments", e.n_instruments}};
  if (se) {
    est["ci_lower"] = e.estimate - kNormal975 * *se;
    est["ci_upper"] = e.estimate + kNormal975 * *se;
    est["p_value"] = two_sided_p(e.estimate / *se);
    est["se_display"] = format_double(*se);
  } else {
    est["ci_lower"] = nullptr;
    est["ci_upper"] = nullptr;
    est["p_value"] = nullptr;
    est["se_display"] = "-";
    est["se_code"] = warning::kNegVariance;
  }
  json out{{"method", estimation_method_name(r.method)},
           {"effects", r.random_effects ? "random" : "fixed"},
           {"instruments", r.instrument_ids},
           {"estimate", est},
           {"diagnostics", to_json(e.diagnostics)},
           {"warnings", r.warnings},
           {"notes", r.notes}};
  out["selection"] = r.selection ? to_json(*r.selection) : json(nullptr);
  out["pca"] = r.pca ? to_json(*r.pca, r.instrument_ids) : json(nullptr);
  if (r.ridge) {
    out["ridge"] = json{{"epsilon", r.ridge->epsilon},
                        {"estimate_before", r.ridge->estimate_before},
                        {"se_before", optional_number(r.ridge->se_before)},
                        {"estimate_after", r.ridge->estimate_after},
                        {"se_after", optional_number(r.ridge->se_after)},
                        {"shift_in_se", r.ridge->shift_in_se},
                        {"flagged", r.ridge->flagged}};
  } else {
    out["ridge"] = nullptr;
  }
  json inputs = json::array();
  for (const auto& d : r.provenance.inputs) {
    inputs.push_back(json{{"role", d.role}, {"file", d.file}, {"sha256", d.sha256}});
  }
  out["provenance"] = json{{"inputs", inputs},
                           {"seed", r.provenance.seed ? json(*r.provenance.seed) : json(nullptr)},
                           {"version", r.provenance.version}};
  return out;
}

json to_json(const ExperimentResult& r) {
  json specs = json::array();
  for (const auto& s : r.specs) {
    json spec{{"label", s.label},
              {"mean_estimate", s.mean_estimate},
              {"sd_estimate", s.sd_estimate},
              {"mean_se", s.mean_se},
              {"empirical_power", s.empirical_power},
              {"undefined_se_count", s.undefined_se_count},
              {"failed_count", s.failed_count},
              {"iterations", s.iterations}};
    specs.push_back(spec);
  }
  return json{{"design", design_name(r.design)},
              {"seed", r.seed},
              {"config_hash", r.config_hash},
              {"iterations", r.iterations},
              {"specs", specs},
              {"warnings", r.warnings}};
}

std::string dump_json(const json& value) { return value.dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Human-readable tables

std::string format_fixed(double value, int decimals) {
  if (!std::isfinite(value)) return std::isnan(value) ? "nan" : (value > 0 ? "inf" : "-inf");
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  std::string s = buf;
  if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

std::string render_table(const AnalysisReport& r) {
  std::ostringstream os;
  const CausalEstimate& e = r.estimate;
  const auto se = r.reported_se();
  os << pad("method", 14) << estimation_method_name(r.method) << " ("
     << (r.random_effects ? "random" : "fixed") << " effects)\n";
  os << pad("instruments", 14) << e.n_instruments << '\n';
  os << pad("estimate", 14) << format_fixed(e.estimate) << '\n';
  if (se) {
    os << pad("se", 14) << format_fixed(*se) << '\n';
    os << pad("95% CI", 14) << format_fixed(e.estimate - kNormal975 * *se) << " to "
       << format_fixed(e.estimate + kNormal975 * *se) << '\n';
    os << pad("p-value", 14) << format_sci(two_sided_p(e.estimate / *se)) << '\n';
  } else {
    os << pad("se", 14) << "- (" << warning::kNegVariance << ")\n";
  }
  os << pad("condition", 14) << format_sci(e.diagnostics.condition_number) << '\n';
  if (r.pca) os << pad("components", 14) << r.pca->k << '\n';
  if (r.ridge) {
    os << pad("ridge", 14) << format_sci(r.ridge->epsilon) << ", shift "
       << format_fixed(r.ridge->shift_in_se) << " SE\n";
  }
  if (!r.warnings.empty()) os << pad("warnings", 14) << join_ids(r.warnings) << '\n';
  for (const auto& n : r.notes) os << "note: " << n << '\n';
  return os.str();
}

std::string render_table(const SelectionResult& s) {
  std::ostringstream os;
  os << "method " << selection_method_name(s.method);
  for (const auto& [name, value] : s.parameters) os << ", " << name << " " << format_double(value);
  os << "\nselected " << s.selected_ids.size() << ": " << join_ids(s.selected_ids) << '\n';
  os << pad("step", 6) << pad("variant", 16) << pad("p-value", 12) << "removed / note\n";
  for (const auto& step : s.trace) {
    os << pad(std::to_string(step.step), 6) << pad(step.chosen_id.empty() ? "-" : step.chosen_id, 16)
       << pad(format_sci(step.statistic), 12) << join_ids(step.removed);
    if (!step.note.empty()) os << (step.removed.empty() ? "" : " ") << step.note;
    os << '\n';
  }
  return os.str();
}

std::string render_table(const PcaComponents& c) {
  std::ostringstream os;
  os << "components retained " << c.k << " (variance threshold " << format_fixed(c.variance_threshold)
     << ")\n";
  os << pad("PC", 6) << pad("eigenvalue", 14) << pad("share", 8) << "cumulative\n";
  for (Eigen::Index i = 0; i < c.eigenvalues.size(); ++i) {
    os << pad(std::to_string(i + 1), 6) << pad(format_sci(c.eigenvalues[i]), 14)
       << pad(format_fixed(c.shares[i]), 8) << format_fixed(c.cumulative_shares[i]) << '\n';
  }
  for (const auto& w : c.warnings) os << "warning: " << w << '\n';
  return os.str();
}

std::string render_table(const DiagnosticsReport& r, const std::string& title) {
  std::ostringstream os;
  os << title << '\n';
  os << "  " << pad("determinant", 22) << format_sci(r.determinant) << '\n';
  os << "  " << pad("log |determinant|", 22) << format_fixed(r.log_abs_determinant) << '\n';
  os << "  " << pad("condition number", 22) << format_sci(r.condition_number) << '\n';
  os << "  " << pad("min eigenvalue", 22) << format_sci(r.min_eigenvalue) << '\n';
  os << "  " << pad("max |inverse element|", 22)
     << (r.max_abs_inverse_element ? format_sci(*r.max_abs_inverse_element) : "-") << '\n';
  os << "  " << pad("singular", 22) << (r.singular ? "yes" : "no") << '\n';
  if (!r.warnings.empty()) os << "  " << pad("warnings", 22) << join_ids(r.warnings) << '\n';
  return os.str();
}

std::string render_table(const ExperimentResult& r) {
  std::ostringstream os;
  os << "design " << design_name(r.design) << ", seed " << r.seed << ", iterations " << r.iterations
     << '\n';
  os << pad("spec", 22) << pad("mean", 9) << pad("sd", 9) << pad("mean se", 9) << pad("power", 8)
     << pad("undef", 7) << "failed\n";
  for (const auto& s : r.specs) {
    os << pad(s.label, 22) << pad(format_fixed(s.mean_estimate), 9)
       << pad(format_fixed(s.sd_estimate), 9) << pad(format_fixed(s.mean_se), 9)
       << pad(format_fixed(s.empirical_power), 8) << pad(std::to_string(s.undefined_se_count), 7)
       << s.failed_count << '\n';
  }
  for (const auto& w : r.warnings) os << "warning: " << w << '\n';
  return os.str();
}

std::string plot_data_tsv(const SummarySet& summary, const AnalysisReport& report) {
  std::set<std::string> selected;
  if (report.selection) {
    selected.insert(report.selection->selected_ids.begin(), report.selection->selected_ids.end());
  }
  std::ostringstream os;
  os << "#slope\t" << format_double(report.estimate.estimate) << '\n';
  os << "#method\t" << estimation_method_name(report.method) << '\n';
  os << "variant_id\tbeta_x\tse_x\tbeta_y\tse_y\tci_halfwidth_x\tci_halfwidth_y\tselected\n";
  for (const auto& v : summary.variants()) {
    const bool used = !report.selection || selected.count(v.variant_id) > 0;
    os << v.variant_id << '\t' << format_double(v.beta_x) << '\t' << format_double(v.se_x) << '\t'
       << format_double(v.beta_y) << '\t' << format_double(v.se_y) << '\t'
       << format_double(kNormal975 * v.se_x) << '\t' << format_double(kNormal975 * v.se_y) << '\t'
       << (used ? 1 : 0) << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Experiment configuration

namespace {

SelectionSpec parse_spec(const json& j) {
  const std::string method = j.at("method").get<std::string>();
  const auto param = [&](const char* key) {
    if (!j.contains(key)) {
      throw Error(ErrorCode::kParse, "selection '" + method + "' needs '" + key + "'");
    }
    return j.at(key).get<double>();
  };
  if (method == "none") return SelectionSpec::none();
  if (method == "prune") return SelectionSpec::prune(param("rho"));
  if (method == "conditional") return SelectionSpec::conditional(param("pvalue"));
  if (method == "pca") return SelectionSpec::pca(param("variance"));
  throw Error(ErrorCode::kParse, "unknown selection method in config: " + method);
}

}  // namespace

ExperimentConfig read_experiment_config(const std::filesystem::path& path,
                                        std::vector<InputDigest>* digests) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kParse, "cannot open " + path.string());
  try {
    const json j = json::parse(in);
    static const std::set<std::string> known{
        "design",      "iterations",  "seed",      "causal_effect", "rounding_decimals",
        "selection",   "summary",     "correlation", "panel",       "subset_size",
        "sample_size", "threads",     "keep_records"};
    for (const auto& [key, value] : j.items()) {
      if (!known.count(key)) throw Error(ErrorCode::kParse, "unknown config key: " + key);
    }
    const std::filesystem::path base = path.parent_path();
    const auto resolve = [&](const std::string& p) {
      const std::filesystem::path q(p);
      return q.is_absolute() ? q : base / q;
    };

    const auto summary_path = resolve(j.at("summary").get<std::string>());
    if (digests) digests->push_back(digest_input("summary", summary_path));
    SummarySet summary = read_summary_tsv(summary_path);

    std::optional<GenotypePanel> panel;
    if (j.contains("panel")) {
      const auto p = resolve(j.at("panel").get<std::string>());
      if (digests) digests->push_back(digest_input("panel", p));
      panel = read_panel_tsv(p);
      summary = harmonize(summary, panel->allele_map()).summary;
    }
    std::optional<CorrelationMatrix> corr;
    if (j.contains("correlation")) {
      const auto p = resolve(j.at("correlation").get<std::string>());
      if (digests) digests->push_back(digest_input("correlation", p));
      corr = read_correlation_tsv(p);
    } else if (panel) {
      corr = panel_correlation(*panel).corr;
    } else {
      throw Error(ErrorCode::kParse, "config needs 'correlation' or 'panel'");
    }

    std::vector<SelectionSpec> specs;
    for (const auto& s : j.at("selection")) specs.push_back(parse_spec(s));

    std::optional<int> decimals;
    if (j.contains("rounding_decimals") && !j.at("rounding_decimals").is_null()) {
      decimals = j.at("rounding_decimals").get<int>();
    }
    std::optional<double> sample_size;
    if (j.contains("sample_size") && !j.at("sample_size").is_null()) {
      sample_size = j.at("sample_size").get<double>();
    }

    return ExperimentConfig{
        .design = parse_design(j.at("design").get<std::string>()),
        .iterations = j.value("iterations", std::size_t{1000}),
        .seed = j.value("seed", std::uint64_t{1}),
        .causal_effect = j.value("causal_effect", 0.0),
        .rounding_decimals = decimals,
        .selection_specs = std::move(specs),
        .base_summary = std::move(summary),
        .base_corr = std::move(*corr),
        .reference_panel = std::move(panel),
        .subset_size = j.value("subset_size", std::size_t{0}),
        .sample_size = sample_size,
        .threads = j.value("threads", 1u),
        .keep_records = j.value("keep_records", false),
    };
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("config: ") + e.what());
  }
}

}  // namespace mrld
