#include "mrld/io.hpp"

#include "mrld/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <unordered_map>

namespace mrld {

namespace {

constexpr std::string_view kNa = "NA";

bool next_line(std::istream& in, std::string& line) {
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) return true;
  }
  return false;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kParse, "cannot open " + path.string());
  return in;
}

std::string join(const std::vector<std::string>& items, char sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out.push_back(sep);
    out += items[i];
  }
  return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string clean_field(std::string s) {
  for (char& c : s) {
    if (c == '\t' || c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

std::optional<double> parse_optional(const std::string& text) {
  if (text.empty() || text == kNa) return std::nullopt;
  return parse_double(text);
}

std::string format_optional(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string(kNa);
}

std::size_t parse_size(const std::string& text) {
  std::size_t value = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw Error(ErrorCode::kParse, "bad integer: " + text);
  return value;
}

std::uint64_t parse_u64(const std::string& text) {
  std::uint64_t value = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw Error(ErrorCode::kParse, "bad integer: " + text);
  return value;
}

void expect_fields(const std::vector<std::string>& fields, std::size_t n, std::size_t line_no) {
  if (fields.size() != n) {
    throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) + ": expected " +
                                       std::to_string(n) + " fields, found " +
                                       std::to_string(fields.size()));
  }
}

std::string header_id(const std::string& cell) { return cell.substr(0, cell.find(':')); }

}  // namespace

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

double parse_double(std::string_view text) {
  std::size_t b = 0, e = text.size();
  while (b < e && (text[b] == ' ')) ++b;
  while (e > b && (text[e - 1] == ' ')) --e;
  text = text.substr(b, e - b);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw Error(ErrorCode::kParse, "not a number: '" + std::string(text) + "'");
  }
  return value;
}

std::vector<std::string> split_tabs(const std::string& line) { return split(line, '\t'); }

void write_text(const std::filesystem::path& path, const std::string& content) {
  if (path == "-") {
    std::cout << content;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kParse, "cannot write " + path.string());
  out << content;
}

// ---------------------------------------------------------------------------
// Summary statistics

SummarySet read_summary_tsv(std::istream& in) {
  std::string line;
  if (!next_line(in, line)) throw Error(ErrorCode::kParse, "summary file is empty");
  const auto header = split_tabs(line);
  std::unordered_map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const char* name :
       {"variant_id", "effect_allele", "other_allele", "beta_x", "se_x", "beta_y", "se_y"}) {
    if (!col.count(name)) {
      throw Error(ErrorCode::kParse, std::string("summary header lacks column ") + name);
    }
  }
  const auto optional_col = [&](const char* name) -> std::optional<std::size_t> {
    auto it = col.find(name);
    if (it == col.end()) return std::nullopt;
    return it->second;
  };
  const auto maf = optional_col("maf");
  const auto n_x = optional_col("n_x");
  const auto n_y = optional_col("n_y");

  std::vector<VariantSummary> variants;
  std::size_t line_no = 1;
  while (next_line(in, line)) {
    ++line_no;
    const auto f = split_tabs(line);
    expect_fields(f, header.size(), line_no);
    VariantSummary v;
    v.variant_id = f[col["variant_id"]];
    v.effect_allele = f[col["effect_allele"]];
    v.other_allele = f[col["other_allele"]];
    v.beta_x = parse_double(f[col["beta_x"]]);
    v.se_x = parse_double(f[col["se_x"]]);
    v.beta_y = parse_double(f[col["beta_y"]]);
    v.se_y = parse_double(f[col["se_y"]]);
    if (maf) v.maf = parse_optional(f[*maf]);
    if (n_x) v.n_x = parse_optional(f[*n_x]);
    if (n_y) v.n_y = parse_optional(f[*n_y]);
    variants.push_back(std::move(v));
  }
  return SummarySet(std::move(variants));
}

SummarySet read_summary_tsv(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_summary_tsv(in);
}

void write_summary_tsv(std::ostream& out, const SummarySet& summary) {
  bool has_maf = false, has_nx = false, has_ny = false;
  for (const auto& v : summary.variants()) {
    has_maf |= v.maf.has_value();
    has_nx |= v.n_x.has_value();
    has_ny |= v.n_y.has_value();
  }
  out << "variant_id\teffect_allele\tother_allele\tbeta_x\tse_x\tbeta_y\tse_y";
  if (has_maf) out << "\tmaf";
  if (has_nx) out << "\tn_x";
  if (has_ny) out << "\tn_y";
  out << '\n';
  for (const auto& v : summary.variants()) {
    out << v.variant_id << '\t' << v.effect_allele << '\t' << v.other_allele << '\t'
        << format_double(v.beta_x) << '\t' << format_double(v.se_x) << '\t'
        << format_double(v.beta_y) << '\t' << format_double(v.se_y);
    if (has_maf) out << '\t' << format_optional(v.maf);
    if (has_nx) out << '\t' << format_optional(v.n_x);
    if (has_ny) out << '\t' << format_optional(v.n_y);
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Correlation matrix

CorrelationMatrix read_correlation_tsv(std::istream& in) {
  std::string line;
  if (!next_line(in, line)) throw Error(ErrorCode::kParse, "correlation file is empty");
  auto header = split_tabs(line);
  if (header.size() < 2) throw Error(ErrorCode::kParse, "correlation header has no variant ids");
  std::vector<std::string> ids(header.begin() + 1, header.end());
  std::unordered_map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < ids.size(); ++i) pos[ids[i]] = i;
  const auto n = static_cast<Eigen::Index>(ids.size());
  Eigen::MatrixXd values(n, n);
  std::vector<bool> seen(ids.size(), false);
  std::size_t line_no = 1;
  while (next_line(in, line)) {
    ++line_no;
    const auto f = split_tabs(line);
    expect_fields(f, ids.size() + 1, line_no);
    auto it = pos.find(f[0]);
    if (it == pos.end() || seen[it->second]) {
      throw Error(ErrorCode::kParse, "unexpected or repeated row id " + f[0]);
    }
    seen[it->second] = true;
    for (std::size_t c = 0; c < ids.size(); ++c) {
      values(static_cast<Eigen::Index>(it->second), static_cast<Eigen::Index>(c)) =
          parse_double(f[c + 1]);
    }
  }
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (!seen[i]) throw Error(ErrorCode::kParse, "correlation row missing for " + ids[i]);
  }
  return CorrelationMatrix(std::move(ids), std::move(values));
}

CorrelationMatrix read_correlation_tsv(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_correlation_tsv(in);
}

void write_correlation_tsv(std::ostream& out, const CorrelationMatrix& corr) {
  out << "variant_id";
  for (const auto& id : corr.ids()) out << '\t' << id;
  out << '\n';
  for (std::size_t i = 0; i < corr.size(); ++i) {
    out << corr.ids()[i];
    for (std::size_t j = 0; j < corr.size(); ++j) out << '\t' << format_double(corr(i, j));
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Genotype panel

GenotypePanel read_panel_tsv(std::istream& in) {
  std::string line;
  if (!next_line(in, line)) throw Error(ErrorCode::kParse, "panel file is empty");
  const auto header = split_tabs(line);
  const std::size_t first = (!header.empty() && header[0].find(':') == std::string::npos) ? 1 : 0;
  GenotypePanel panel;
  for (std::size_t c = first; c < header.size(); ++c) {
    const auto parts = split(header[c], ':');
    if (parts.size() != 3) {
      throw Error(ErrorCode::kParse,
                  "panel header cell must be variant_id:effect_allele:other_allele: " + header[c]);
    }
    panel.variant_ids.push_back(parts[0]);
    panel.alleles.push_back(AllelePair{parts[1], parts[2]});
  }
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (next_line(in, line)) {
    ++line_no;
    const auto f = split_tabs(line);
    expect_fields(f, header.size(), line_no);
    std::vector<double> row;
    row.reserve(f.size() - first);
    for (std::size_t c = first; c < f.size(); ++c) {
      const double g = parse_double(f[c]);
      if (!(g >= 0.0 && g <= 2.0)) {
        throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) +
                                           ": genotype outside [0, 2]: " + f[c]);
      }
      row.push_back(g);
    }
    rows.push_back(std::move(row));
  }
  panel.dosages.resize(static_cast<Eigen::Index>(rows.size()),
                       static_cast<Eigen::Index>(panel.variant_ids.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      panel.dosages(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return panel;
}

GenotypePanel read_panel_tsv(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_panel_tsv(in);
}

void write_panel_tsv(std::ostream& out, const GenotypePanel& panel) {
  for (std::size_t c = 0; c < panel.variant_ids.size(); ++c) {
    if (c) out << '\t';
    const AllelePair a = c < panel.alleles.size() ? panel.alleles[c] : AllelePair{"A1", "A2"};
    out << panel.variant_ids[c] << ':' << a.effect_allele << ':' << a.other_allele;
  }
  out << '\n';
  for (Eigen::Index r = 0; r < panel.dosages.rows(); ++r) {
    for (Eigen::Index c = 0; c < panel.dosages.cols(); ++c) {
      if (c) out << '\t';
      out << format_double(panel.dosages(r, c));
    }
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Individual-level data

IndividualData read_individual_tsv(std::istream& in) {
  std::string line;
  if (!next_line(in, line)) throw Error(ErrorCode::kParse, "individual-level file is empty");
  const auto header = split_tabs(line);
  std::optional<std::size_t> xcol, ycol;
  std::vector<std::size_t> gcols;
  std::vector<std::string> ids;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == "risk_factor") {
      xcol = c;
    } else if (header[c] == "outcome") {
      ycol = c;
    } else {
      gcols.push_back(c);
      ids.push_back(header_id(header[c]));
    }
  }
  if (!xcol || !ycol) {
    throw Error(ErrorCode::kParse, "individual-level header needs risk_factor and outcome");
  }
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (next_line(in, line)) {
    ++line_no;
    const auto f = split_tabs(line);
    expect_fields(f, header.size(), line_no);
    std::vector<double> row;
    for (const auto& s : f) row.push_back(parse_double(s));
    rows.push_back(std::move(row));
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd g(n, static_cast<Eigen::Index>(gcols.size()));
  Eigen::VectorXd x(n), y(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& row = rows[static_cast<std::size_t>(r)];
    x[r] = row[*xcol];
    y[r] = row[*ycol];
    for (std::size_t c = 0; c < gcols.size(); ++c) g(r, static_cast<Eigen::Index>(c)) = row[gcols[c]];
  }
  return IndividualData(std::move(g), std::move(x), std::move(y), std::move(ids));
}

IndividualData read_individual_tsv(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_individual_tsv(in);
}

void write_individual_tsv(std::ostream& out, const IndividualData& data) {
  out << "risk_factor\toutcome";
  for (const auto& id : data.variant_ids()) out << '\t' << id;
  out << '\n';
  for (Eigen::Index r = 0; r < data.samples(); ++r) {
    out << format_double(data.risk_factor()[r]) << '\t' << format_double(data.outcome()[r]);
    for (Eigen::Index c = 0; c < data.variants(); ++c) {
      out << '\t' << format_double(data.genotypes()(r, c));
    }
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Selection results

void write_selection_tsv(std::ostream& out, const SelectionResult& selection) {
  out << "#method\t" << selection_method_name(selection.method) << '\n';
  for (const auto& [name, value] : selection.parameters) {
    out << "#parameter\t" << name << '\t' << format_double(value) << '\n';
  }
  out << "#selected";
  for (const auto& id : selection.selected_ids) out << '\t' << id;
  out << '\n';
  out << "step\tvariant_id\tstatistic\tremoved\tnote\n";
  for (const auto& s : selection.trace) {
    out << s.step << '\t' << s.chosen_id << '\t' << format_double(s.statistic) << '\t'
        << join(s.removed, ',') << '\t' << clean_field(s.note) << '\n';
  }
}

SelectionResult read_selection_tsv(std::istream& in) {
  SelectionResult result;
  std::string line;
  bool in_table = false;
  bool have_method = false;
  std::size_t line_no = 0;
  while (next_line(in, line)) {
    ++line_no;
    const auto f = split_tabs(line);
    if (!in_table) {
      if (f[0] == "#method" && f.size() == 2) {
        result.method = parse_selection_method(f[1]);
        have_method = true;
      } else if (f[0] == "#parameter" && f.size() == 3) {
        result.parameters[f[1]] = parse_double(f[2]);
      } else if (f[0] == "#selected") {
        result.selected_ids.assign(f.begin() + 1, f.end());
      } else if (f[0] == "step") {
        in_table = true;
      } else {
        throw Error(ErrorCode::kParse, "unexpected selection line " + std::to_string(line_no));
      }
      continue;
    }
    expect_fields(f, 5, line_no);
    SelectionStep s;
    s.step = static_cast<int>(parse_size(f[0]));
    s.chosen_id = f[1];
    s.statistic = parse_double(f[2]);
    if (!f[3].empty()) s.removed = split(f[3], ',');
    s.note = f[4];
    result.trace.push_back(std::move(s));
  }
  if (!have_method) throw Error(ErrorCode::kParse, "selection file lacks #method");
  return result;
}

SelectionResult read_selection_tsv(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_selection_tsv(in);
}

// ---------------------------------------------------------------------------
// Experiment results

void write_experiment_tsv(std::ostream& out, const ExperimentResult& result) {
  out << "#design\t" << design_name(result.design) << '\n'
      << "#seed\t" << result.seed << '\n'
      << "#config_hash\t" << result.config_hash << '\n'
      << "#iterations\t" << result.iterations << '\n';
  for (const auto& w : result.warnings) out << "#warning\t" << clean_field(w) << '\n';
  out << "spec\tmean_estimate\tsd_estimate\tmean_se\tempirical_power\tundefined_se_count\t"
         "failed_count\titerations\n";
  bool any_records = false;
  for (const auto& s : result.specs) {
    out << s.label << '\t' << format_double(s.mean_estimate) << '\t'
        << format_double(s.sd_estimate) << '\t' << format_double(s.mean_se) << '\t'
        << format_double(s.empirical_power) << '\t' << s.undefined_se_count << '\t'
        << s.failed_count << '\t' << s.iterations << '\n';
    any_records |= !s.records.empty();
  }
  if (!any_records) return;
  out << "#records\n";
  out << "spec\titeration\testimate\tse\trejected\tn_selected\tfailure\n";
  for (const auto& s : result.specs) {
    for (const auto& r : s.records) {
      out << s.label << '\t' << r.iteration << '\t' << format_optional(r.estimate) << '\t'
          << format_optional(r.se) << '\t' << (r.rejected ? 1 : 0) << '\t' << r.n_selected
          << '\t' << r.failure << '\n';
    }
  }
}

ExperimentResult read_experiment_tsv(std::istream& in) {
  ExperimentResult result;
  std::string line;
  enum class Part { kHeader, kSpecs, kRecordsHeader, kRecords } part = Part::kHeader;
  std::size_t line_no = 0;
  std::map<std::string, std::size_t> spec_index;
  while (next_line(in, line)) {
    ++line_no;
    const auto f = split_tabs(line);
    switch (part) {
      case Part::kHeader:
        if (f[0] == "#design" && f.size() == 2) {
          result.design = parse_design(f[1]);
        } else if (f[0] == "#seed" && f.size() == 2) {
          result.seed = parse_u64(f[1]);
        } else if (f[0] == "#config_hash" && f.size() == 2) {
          result.config_hash = f[1];
        } else if (f[0] == "#iterations" && f.size() == 2) {
          result.iterations = parse_size(f[1]);
        } else if (f[0] == "#warning" && f.size() == 2) {
          result.warnings.push_back(f[1]);
        } else if (f[0] == "spec") {
          part = Part::kSpecs;
        } else {
          throw Error(ErrorCode::kParse, "unexpected result line " + std::to_string(line_no));
        }
        break;
      case Part::kSpecs: {
        if (f[0] == "#records") {
          part = Part::kRecordsHeader;
          break;
        }
        expect_fields(f, 8, line_no);
        SpecResult s;
        s.label = f[0];
        s.mean_estimate = parse_double(f[1]);
        s.sd_estimate = parse_double(f[2]);
        s.mean_se = parse_double(f[3]);
        s.empirical_power = parse_double(f[4]);
        s.undefined_se_count = parse_size(f[5]);
        s.failed_count = parse_size(f[6]);
        s.iterations = parse_size(f[7]);
        spec_index[s.label] = result.specs.size();
        result.specs.push_back(std::move(s));
        break;
      }
      case Part::kRecordsHeader:
        part = Part::kRecords;
        break;
      case Part::kRecords: {
        expect_fields(f, 7, line_no);
        auto it = spec_index.find(f[0]);
        if (it == spec_index.end()) throw Error(ErrorCode::kParse, "record for unknown spec " + f[0]);
        IterationRecord r;
        r.iteration = parse_size(f[1]);
        r.estimate = parse_optional(f[2]);
        r.se = parse_optional(f[3]);
        r.rejected = f[4] == "1";
        r.n_selected = static_cast<int>(parse_double(f[5]));
        r.failure = f[6];
        result.specs[it->second].records.push_back(std::move(r));
        break;
      }
    }
  }
  return result;
}

ExperimentResult read_experiment_tsv(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_experiment_tsv(in);
}

}  // namespace mrld
