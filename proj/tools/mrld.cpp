// mrld: Mendelian randomization with correlated variants.
//
// Exit status: 0 success, 1 usage or parse error, 2 numerical failure. Every
// failure prints "error_code=<CODE>" on standard error.
#include "mrld/analysis.hpp"
#include "mrld/error.hpp"
#include "mrld/io.hpp"

#include "CLI11.hpp"

#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace {

using namespace mrld;

struct InputFlags {
  std::string summary, corr, panel, select;
  bool keep_palindromic = false;

  void add(CLI::App* app, bool summary_required = true) {
    auto* s = app->add_option("--summary", summary, "summary statistics TSV");
    if (summary_required) s->required();
    auto* c = app->add_option("--corr", corr, "signed correlation matrix TSV");
    app->add_option("--panel", panel, "reference genotype panel TSV")->excludes(c);
    app->add_flag("--keep-palindromic", keep_palindromic,
                  "keep A/T and C/G variants when harmonizing against a panel");
  }

  LoadOptions load_options() const {
    LoadOptions o;
    if (!summary.empty()) o.summary = summary;
    if (!corr.empty()) o.correlation = corr;
    if (!panel.empty()) o.panel = panel;
    if (!select.empty()) o.selection = select;
    o.keep_palindromic = keep_palindromic;
    return o;
  }
};

struct EstimateFlags {
  InputFlags in;
  std::string individual;
  std::string method = "ivw";
  std::string effects = "fixed";
  std::optional<double> ridge;
  double variance = 0.99;
  std::string out;

  void add(CLI::App* app) {
    in.add(app, false);
    app->add_option("--select", in.select, "selection TSV; analyse only the selected variants");
    app->add_option("--individual", individual, "individual-level TSV (2sls)");
    app->add_option("--method", method, "estimator")
        ->check(CLI::IsMember({"ivw", "ivw-corr", "pca-ivw", "2sls"}));
    app->add_option("--effects", effects, "standard error model")
        ->check(CLI::IsMember({"fixed", "random"}));
    app->add_option("--ridge", ridge, "add epsilon to the correlation diagonal")
        ->check(CLI::PositiveNumber);
    app->add_option("--variance", variance, "pca-ivw variance threshold")
        ->check(CLI::Range(0.0, 1.0));
  }

  AnalysisReport run(std::optional<PreparedInputs>& prepared) const {
    AnalysisOptions opts;
    opts.method = parse_estimation_method(method);
    opts.random_effects = effects == "random";
    opts.ridge = ridge;
    opts.variance_threshold = variance;
    if (opts.method == EstimationMethod::kTwoStage) {
      if (individual.empty()) throw Error(ErrorCode::kInvalidInput, "2sls needs --individual");
      AnalysisReport r = analyze_individual(read_individual_tsv(individual), opts);
      r.provenance.inputs.push_back(digest_input("individual", individual));
      return r;
    }
    if (in.summary.empty()) throw Error(ErrorCode::kInvalidInput, "--summary is required");
    prepared = load_inputs(in.load_options());
    return analyze(*prepared, opts);
  }
};

unsigned thread_count(std::optional<unsigned> flag, unsigned from_config) {
  if (flag) return *flag;
  if (const char* env = std::getenv("MRLD_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return static_cast<unsigned>(n);
    } catch (const std::exception&) {
    }
    throw Error(ErrorCode::kParse, std::string("MRLD_THREADS must be a positive integer: ") + env);
  }
  return from_config;
}

void print_notes(const std::vector<std::string>& notes) {
  for (const auto& n : notes) std::cerr << "note: " << n << '\n';
}

int run(int argc, char** argv) {
  CLI::App app{"Mendelian randomization with correlated genetic variants"};
  app.require_subcommand(1);
  app.set_version_flag("--version", MRLD_VERSION);

  // estimate
  EstimateFlags est;
  auto* estimate = app.add_subcommand("estimate", "causal effect estimate");
  est.add(estimate);
  estimate->add_option("--out", est.out, "JSON report path ('-' for stdout)");

  // plotdata
  EstimateFlags plot;
  std::string plot_report;
  auto* plotdata = app.add_subcommand("plotdata", "per-variant plot records and fitted slope");
  plot.add(plotdata);
  plotdata->add_option("--out", plot.out, "plot TSV path")->default_val("-");
  plotdata->add_option("--report", plot_report, "JSON report path");

  // select
  InputFlags sel_in;
  std::string sel_method = "prune", sel_out;
  std::optional<double> rho, pvalue, sample_size;
  auto* select = app.add_subcommand("select", "instrument selection");
  sel_in.add(select);
  select->add_option("--method", sel_method)->check(CLI::IsMember({"prune", "conditional"}));
  select->add_option("--rho", rho, "pruning threshold on |rho|")->check(CLI::Range(0.0, 1.0));
  select->add_option("--pvalue", pvalue, "conditional p-value threshold")
      ->check(CLI::Range(0.0, 1.0));
  select->add_option("--sample-size", sample_size, "risk-factor sample size (conditional)")
      ->check(CLI::PositiveNumber);
  select->add_option("--out", sel_out, "selection TSV path");

  // pca
  InputFlags pca_in;
  double pca_variance = 0.99;
  std::string pca_out;
  auto* pca = app.add_subcommand("pca", "principal components of the weighted correlation matrix");
  pca_in.add(pca);
  pca->add_option("--variance", pca_variance)->check(CLI::Range(0.0, 1.0));
  pca->add_option("--out", pca_out, "JSON report path");

  // diagnose
  InputFlags diag_in;
  std::string diag_out;
  auto* diagnose = app.add_subcommand("diagnose", "conditioning of rho and Omega");
  diag_in.add(diagnose, false);
  diagnose->add_option("--out", diag_out, "JSON report path");

  // correlate
  std::string cor_panel, cor_out = "-";
  auto* correlate = app.add_subcommand("correlate", "correlation matrix from a genotype panel");
  correlate->add_option("--panel", cor_panel)->required();
  correlate->add_option("--out", cor_out, "correlation TSV path");

  // simulate
  std::string sim_config, sim_out, sim_json;
  std::optional<std::uint64_t> sim_seed;
  std::optional<unsigned> sim_threads;
  bool sim_records = false;
  auto* simulate = app.add_subcommand("simulate", "Monte-Carlo experiment");
  simulate->add_option("--config", sim_config, "experiment configuration (JSON)")->required();
  simulate->add_option("--out", sim_out, "result TSV path");
  simulate->add_option("--json", sim_json, "result JSON path");
  simulate->add_option("--seed", sim_seed, "overrides the configured seed");
  simulate->add_option("--threads", sim_threads)->check(CLI::PositiveNumber);
  simulate->add_flag("--records", sim_records, "include per-iteration records");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    if (code == 0) return 0;
    std::cerr << "error_code=USAGE\n";
    return 1;
  }

  if (estimate->parsed()) {
    std::optional<PreparedInputs> prepared;
    const AnalysisReport r = est.run(prepared);
    if (!est.out.empty()) write_text(est.out, dump_json(to_json(r)));
    if (est.out != "-") std::cout << render_table(r);
    return 0;
  }

  if (plotdata->parsed()) {
    std::optional<PreparedInputs> prepared;
    const AnalysisReport r = plot.run(prepared);
    if (!prepared) throw Error(ErrorCode::kInvalidInput, "plotdata needs summary statistics");
    write_text(plot.out, plot_data_tsv(prepared->all, r));
    if (!plot_report.empty()) write_text(plot_report, dump_json(to_json(r)));
    return 0;
  }

  if (select->parsed()) {
    const PreparedInputs p = load_inputs(sel_in.load_options());
    print_notes(p.notes);
    const CorrelationMatrix corr = p.corr ? *p.corr : CorrelationMatrix::identity(p.summary.ids());
    if (!p.corr) std::cerr << "note: no correlation given, variants treated as uncorrelated\n";
    SelectionResult result;
    if (sel_method == "prune") {
      if (!rho) throw Error(ErrorCode::kInvalidInput, "prune needs --rho");
      result = prune(p.summary, corr, *rho);
    } else {
      if (!pvalue) throw Error(ErrorCode::kInvalidInput, "conditional needs --pvalue");
      ConditionalOptions opts;
      opts.sample_size = sample_size;
      result = stepwise_conditional(p.summary, corr, *pvalue, opts);
    }
    if (!sel_out.empty()) {
      std::ostringstream os;
      write_selection_tsv(os, result);
      write_text(sel_out, os.str());
    }
    if (sel_out != "-") std::cout << render_table(result);
    return 0;
  }

  if (pca->parsed()) {
    const PreparedInputs p = load_inputs(pca_in.load_options());
    print_notes(p.notes);
    if (!p.corr) throw Error(ErrorCode::kInvalidInput, "pca needs --corr or --panel");
    const PcaComponents c = pca_components(build_psi(p.summary, *p.corr), pca_variance);
    if (!pca_out.empty()) {
      nlohmann::json j = to_json(c, p.summary.ids());
      j["provenance"] = nlohmann::json{{"version", MRLD_VERSION}};
      nlohmann::json inputs = nlohmann::json::array();
      for (const auto& d : p.digests) {
        inputs.push_back({{"role", d.role}, {"file", d.file}, {"sha256", d.sha256}});
      }
      j["provenance"]["inputs"] = inputs;
      write_text(pca_out, dump_json(j));
    }
    if (pca_out != "-") std::cout << render_table(c);
    return 0;
  }

  if (diagnose->parsed()) {
    nlohmann::json j = nlohmann::json::object();
    std::ostringstream table;
    std::optional<CorrelationMatrix> corr;
    if (!diag_in.summary.empty()) {
      const PreparedInputs p = load_inputs(diag_in.load_options());
      print_notes(p.notes);
      if (!p.corr) throw Error(ErrorCode::kInvalidInput, "diagnose needs --corr or --panel");
      corr = p.corr;
      const DiagnosticsReport omega = assess(build_omega(p.summary, *p.corr).values);
      j["omega"] = to_json(omega);
      table << render_table(omega, "Omega");
    } else if (!diag_in.corr.empty()) {
      corr = read_correlation_tsv(diag_in.corr);
    } else if (!diag_in.panel.empty()) {
      const PanelCorrelation pc = panel_correlation(read_panel_tsv(diag_in.panel));
      if (!pc.monomorphic.empty()) {
        std::cerr << "note: monomorphic in the reference data: ";
        for (std::size_t i = 0; i < pc.monomorphic.size(); ++i) {
          std::cerr << (i ? "," : "") << pc.monomorphic[i];
        }
        std::cerr << '\n';
      }
      corr = pc.corr;
    } else {
      throw Error(ErrorCode::kInvalidInput, "diagnose needs --corr or --panel");
    }
    const DiagnosticsReport rho_report = assess(corr->values());
    j["rho"] = to_json(rho_report);
    table << render_table(rho_report, "rho");
    if (!diag_out.empty()) write_text(diag_out, dump_json(j));
    if (diag_out != "-") std::cout << table.str();
    return 0;
  }

  if (correlate->parsed()) {
    const PanelCorrelation pc = panel_correlation(read_panel_tsv(cor_panel));
    if (!pc.monomorphic.empty()) {
      std::cerr << "warning: monomorphic in the reference data, excluded: ";
      for (std::size_t i = 0; i < pc.monomorphic.size(); ++i) {
        std::cerr << (i ? "," : "") << pc.monomorphic[i];
      }
      std::cerr << '\n';
    }
    std::ostringstream os;
    write_correlation_tsv(os, pc.corr);
    write_text(cor_out, os.str());
    return 0;
  }

  if (simulate->parsed()) {
    std::vector<InputDigest> digests;
    ExperimentConfig config = read_experiment_config(sim_config, &digests);
    if (sim_seed) config.seed = *sim_seed;
    config.threads = thread_count(sim_threads, config.threads);
    if (sim_records) config.keep_records = true;
    const ExperimentResult result = run_experiment(config);
    if (!sim_out.empty()) {
      std::ostringstream os;
      write_experiment_tsv(os, result);
      write_text(sim_out, os.str());
    }
    if (!sim_json.empty()) {
      nlohmann::json j = to_json(result);
      nlohmann::json inputs = nlohmann::json::array();
      for (const auto& d : digests) {
        inputs.push_back({{"role", d.role}, {"file", d.file}, {"sha256", d.sha256}});
      }
      j["provenance"] = {{"inputs", inputs}, {"seed", result.seed}, {"version", MRLD_VERSION}};
      write_text(sim_json, dump_json(j));
    }
    if (sim_out != "-" && sim_json != "-") std::cout << render_table(result);
    return 0;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const mrld::Error& e) {
    std::cerr << "error_code=" << mrld::error_code_name(e.code()) << '\n'
              << "error: " << e.what() << '\n';
    return mrld::is_numerical(e.code()) ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error_code=IO\nerror: " << e.what() << '\n';
    return 1;
  }
}
