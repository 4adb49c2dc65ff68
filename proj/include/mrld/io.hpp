// Tab-separated file formats.
//
// Summary statistics (header required, columns in any order):
//   variant_id effect_allele other_allele beta_x se_x beta_y se_y [maf] [n_x] [n_y]
//   Missing optional values are written and read as NA.
//
// Correlation matrix: full square matrix of SIGNED correlations r (not r^2).
//   The first header cell is a label, the remaining cells are variant ids; every
//   row starts with its variant id.
//
// Genotype panel: one row per individual, one column per variant, header cells
//   variant_id:effect_allele:other_allele, entries are allele counts or dosages
//   in [0, 2]. A leading header cell without ':' marks an individual-id column.
//
// Individual-level data: columns risk_factor and outcome plus one column per
//   variant (header variant_id or variant_id:effect_allele:other_allele).
//
// Numbers are written in shortest round-trip form, so write-then-read is exact.
#pragma once

#include "mrld/core_model.hpp"
#include "mrld/estimators.hpp"
#include "mrld/selection.hpp"
#include "mrld/simulation.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace mrld {

std::string format_double(double value);
double parse_double(std::string_view text);

std::vector<std::string> split_tabs(const std::string& line);

SummarySet read_summary_tsv(std::istream& in);
SummarySet read_summary_tsv(const std::filesystem::path& path);
void write_summary_tsv(std::ostream& out, const SummarySet& summary);

CorrelationMatrix read_correlation_tsv(std::istream& in);
CorrelationMatrix read_correlation_tsv(const std::filesystem::path& path);
void write_correlation_tsv(std::ostream& out, const CorrelationMatrix& corr);

GenotypePanel read_panel_tsv(std::istream& in);
GenotypePanel read_panel_tsv(const std::filesystem::path& path);
void write_panel_tsv(std::ostream& out, const GenotypePanel& panel);

IndividualData read_individual_tsv(std::istream& in);
IndividualData read_individual_tsv(const std::filesystem::path& path);
void write_individual_tsv(std::ostream& out, const IndividualData& data);

SelectionResult read_selection_tsv(std::istream& in);
SelectionResult read_selection_tsv(const std::filesystem::path& path);
void write_selection_tsv(std::ostream& out, const SelectionResult& selection);

ExperimentResult read_experiment_tsv(std::istream& in);
ExperimentResult read_experiment_tsv(const std::filesystem::path& path);
void write_experiment_tsv(std::ostream& out, const ExperimentResult& result);

// Writes `content` to `path`, or to stdout when path is "-".
void write_text(const std::filesystem::path& path, const std::string& content);

}  // namespace mrld
