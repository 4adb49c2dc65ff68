// Analysis pipeline shared by the command-line tool: load inputs, harmonize
// them against a reference panel, estimate, and render reports.
#pragma once

#include "mrld/core_model.hpp"
#include "mrld/diagnostics.hpp"
#include "mrld/estimators.hpp"
#include "mrld/selection.hpp"
#include "mrld/simulation.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mrld {

enum class EstimationMethod { kIvw, kIvwCorrelated, kPcaIvw, kTwoStage };

std::string estimation_method_name(EstimationMethod method);
EstimationMethod parse_estimation_method(const std::string& name);

struct InputDigest {
  std::string role;
  std::string file;  // base name only, so reports do not depend on the working directory
  std::string sha256;

  bool operator==(const InputDigest&) const = default;
};

InputDigest digest_input(const std::string& role, const std::filesystem::path& path);

struct Provenance {
  std::vector<InputDigest> inputs;
  std::optional<std::uint64_t> seed;
  std::string version = MRLD_VERSION;
};

// Summary statistics with the correlation matrix that goes with them, after
// harmonization and alignment. `notes` records everything that was dropped or
// flipped on the way.
struct PreparedInputs {
  SummarySet summary;  // the variants to analyse
  SummarySet all;      // before restriction to a selection
  std::optional<CorrelationMatrix> corr;
  std::optional<SelectionResult> selection;
  std::vector<std::string> notes;
  std::vector<InputDigest> digests;
};

struct LoadOptions {
  std::optional<std::filesystem::path> summary;
  std::optional<std::filesystem::path> correlation;
  std::optional<std::filesystem::path> panel;
  std::optional<std::filesystem::path> selection;  // restrict to selected ids
  bool keep_palindromic = false;
};

PreparedInputs load_inputs(const LoadOptions& options);

struct AnalysisOptions {
  EstimationMethod method = EstimationMethod::kIvw;
  bool random_effects = false;
  std::optional<double> ridge;
  double variance_threshold = 0.99;  // pca-ivw
};

struct AnalysisReport {
  EstimationMethod method = EstimationMethod::kIvw;
  bool random_effects = false;
  std::vector<std::string> instrument_ids;
  std::optional<SelectionResult> selection;
  CausalEstimate estimate;
  std::optional<PcaComponents> pca;
  std::optional<RidgeSensitivity> ridge;
  std::vector<std::string> warnings;
  std::vector<std::string> notes;
  Provenance provenance;

  // The SE matching the chosen effects model.
  std::optional<double> reported_se() const;
};

AnalysisReport analyze(const PreparedInputs& inputs, const AnalysisOptions& options);
AnalysisReport analyze_individual(const IndividualData& data, const AnalysisOptions& options);

nlohmann::json to_json(const DiagnosticsReport& report);
nlohmann::json to_json(const SelectionResult& selection);
nlohmann::json to_json(const PcaComponents& components, const std::vector<std::string>& ids);
nlohmann::json to_json(const AnalysisReport& report);
nlohmann::json to_json(const ExperimentResult& result);

// Stable text for machine-readable output: sorted keys, two-space indent.
std::string dump_json(const nlohmann::json& value);

// Three-decimal human-readable tables.
std::string format_fixed(double value, int decimals = 3);
std::string render_table(const AnalysisReport& report);
std::string render_table(const SelectionResult& selection);
std::string render_table(const PcaComponents& components);
std::string render_table(const DiagnosticsReport& report, const std::string& title);
std::string render_table(const ExperimentResult& result);

// Per-variant plot records plus the fitted slope, as TSV.
std::string plot_data_tsv(const SummarySet& summary, const AnalysisReport& report);

// Experiment configuration in JSON. Relative data paths are resolved against
// the directory of the configuration file.
ExperimentConfig read_experiment_config(const std::filesystem::path& path,
                                        std::vector<InputDigest>* digests = nullptr);

}  // namespace mrld
