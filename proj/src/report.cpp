#include "tracexp/report.hpp"

#include <fmt/format.h>

#include <cmath>

#include "json.hpp"
#include "tracexp/errors.hpp"

namespace tracexp {

using OJson = nlohmann::ordered_json;

ReportFormat parse_report_format(std::string_view s) {
  if (s == "markdown" || s == "md") return ReportFormat::kMarkdown;
  if (s == "csv") return ReportFormat::kCsv;
  if (s == "json") return ReportFormat::kJson;
  throw DataError("unknown report format '" + std::string(s) + "'");
}

std::string_view extension(ReportFormat f) {
  switch (f) {
    case ReportFormat::kMarkdown: return "md";
    case ReportFormat::kCsv: return "csv";
    case ReportFormat::kJson: return "json";
  }
  return "txt";
}

Cell Cell::num(double v) {
  if (std::isinf(v)) return v > 0 ? inf() : str("-" + std::string(kInfinity));
  if (std::isnan(v)) return undefined();
  Cell c;
  c.kind = Kind::kNumber;
  c.number = v;
  return c;
}

Cell Cell::integer_cell(long long v) {
  Cell c;
  c.kind = Kind::kInteger;
  c.integer = v;
  return c;
}

Cell Cell::str(std::string s) {
  Cell c;
  c.kind = Kind::kText;
  c.text = std::move(s);
  return c;
}

Cell Cell::inf() {
  Cell c;
  c.kind = Kind::kInfinity;
  return c;
}

Cell Cell::undefined() {
  Cell c;
  c.kind = Kind::kUndefined;
  return c;
}

Cell Cell::of(const Ratio& r) {
  if (r.is_infinite()) return inf();
  if (r.is_undefined()) return undefined();
  return num(r.value);
}

Cell Cell::of(const std::optional<double>& v) { return v ? num(*v) : undefined(); }

std::string format_number(double v) {
  std::string s = fmt::format("{:.3f}", v);
  if (s == "-0.000") s = "0.000";
  return s;
}

namespace {

std::string cell_text(const Cell& c) {
  switch (c.kind) {
    case Cell::Kind::kNumber: return format_number(c.number);
    case Cell::Kind::kInteger: return std::to_string(c.integer);
    case Cell::Kind::kText: return c.text;
    case Cell::Kind::kInfinity: return std::string(kInfinity);
    case Cell::Kind::kUndefined: return std::string(kUndefined);
  }
  return {};
}

OJson cell_json(const Cell& c) {
  switch (c.kind) {
    case Cell::Kind::kNumber: return OJson::parse(format_number(c.number));
    case Cell::Kind::kInteger: return c.integer;
    default: return cell_text(c);
  }
}

std::string md_escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    if (ch == '|') out += '\\';
    out += ch == '\n' ? ' ' : ch;
  }
  return out;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::string marks(std::uint8_t a) {
  std::string out;
  auto add = [&](const char* m) {
    if (!out.empty()) out += "+";
    out += m;
  };
  if (a & kBest) add("best");
  if (a & kSecondBest) add("second");
  if (a & kWorst) add("worst");
  return out;
}

std::string display(RubricId id) { return std::string(rubric_display_name(id)); }

}  // namespace

Table prevalence_table(const StatsReport& r) {
  Table t;
  t.name = "prevalence";
  t.title = "Failure-mode prevalence";
  t.columns = {"rubric", "P(flag|failure)", "P(flag|success)", "delta", "ratio", "mark"};
  for (const auto& row : r.rows) {
    t.rows.push_back({Cell::str(display(row.rubric)), Cell::num(row.prevalence.p_flag_given_failure),
                      Cell::num(row.prevalence.p_flag_given_success),
                      Cell::num(row.prevalence.delta), Cell::of(row.prevalence.ratio),
                      Cell::str(marks(row.prevalence_annotation))});
  }
  t.notes.push_back(fmt::format("{} runs: {} failed, {} succeeded. Lower delta is better.",
                                r.n_runs, r.n_failure, r.n_success));
  return t;
}

Table reliability_table(const StatsReport& r) {
  Table t;
  t.name = "reliability";
  t.title = "Reliability correlates";
  t.columns = {"rubric", "P(success|flag)", "P(success|no flag)", "delta", "RR", "mark"};
  for (const auto& row : r.rows) {
    t.rows.push_back({Cell::str(display(row.rubric)),
                      Cell::of(row.reliability.p_success_given_flag),
                      Cell::of(row.reliability.p_success_given_noflag),
                      Cell::of(row.reliability.delta), Cell::of(row.reliability.rr),
                      Cell::str(marks(row.reliability_annotation))});
  }
  t.notes.push_back(fmt::format("{} runs. Higher RR is better; undefined RR is unranked.",
                                r.n_runs));
  return t;
}

Table contingency_table(const StatsReport& r) {
  Table t;
  t.name = "contingency";
  t.title = "Flag by outcome counts";
  t.columns = {"rubric", "flag_failure", "noflag_failure", "flag_success", "noflag_success"};
  for (const auto& row : r.rows) {
    t.rows.push_back({Cell::str(display(row.rubric)), Cell::integer_cell(row.table.a),
                      Cell::integer_cell(row.table.b), Cell::integer_cell(row.table.c),
                      Cell::integer_cell(row.table.d)});
  }
  return t;
}

Table bridge_table(const BridgeReport& r) {
  Table t;
  t.name = "bridge";
  t.title = "Global SHAP attribution of the outcome surrogate";
  t.columns = {"rubric", "mean_abs_shap", "weight", "mark"};
  for (std::size_t k = 0; k < r.ranking.size(); ++k) {
    const auto i = rubric_index(r.ranking[k]);
    t.rows.push_back({Cell::str(display(r.ranking[k])), Cell::num(r.mean_abs_shap[i]),
                      Cell::num(r.weights[i]),
                      Cell::str(k == 0 ? "best" : k == 1 ? "second" : "")});
  }
  t.notes.push_back(fmt::format(
      "Surrogate: logistic regression, label 1 = success, feature 1 = {}. "
      "{} iterations, final loss {}, gradient max-norm {:.2e}{}.",
      r.polarity == FeaturePolarity::kViolation ? "violation" : "satisfied", r.iterations,
      format_number(r.final_loss), r.grad_norm, r.converged ? "" : " (not converged)"));
  return t;
}

Table paradigm_table(const ParadigmSummary& s) {
  Table t;
  t.name = "paradigm";
  t.title = "Correlative versus diagnostic signals";
  t.columns = {"rubric", "mean_abs_shap", "shap_rank", "delta_prev", "prevalence_ratio", "RR"};
  for (const auto& row : s.rows) {
    t.rows.push_back({Cell::str(display(row.rubric)), Cell::num(row.mean_abs_shap),
                      Cell::integer_cell(row.shap_rank), Cell::num(row.delta_prev),
                      Cell::of(row.prevalence_ratio), Cell::of(row.rr)});
  }
  t.notes.push_back(fmt::format("{} runs.", s.n_runs));
  return t;
}

Table stability_table(const xai::StabilityResult& r, const xai::StabilityConfig& config) {
  Table t;
  t.name = "stability";
  t.title = "Explanation stability";
  t.columns = {"perturbation", "k", "n_perturb", "mean_rho", "pairs_evaluated", "pairs_skipped"};
  t.rows.push_back({Cell::str(std::string(xai::to_string(config.perturbation))),
                    Cell::integer_cell(static_cast<long long>(config.k)),
                    Cell::integer_cell(config.n_perturb), Cell::num(r.mean_rho),
                    Cell::integer_cell(static_cast<long long>(r.pairs_evaluated)),
                    Cell::integer_cell(static_cast<long long>(r.pairs_skipped))});
  return t;
}

std::string render_report(const std::vector<Table>& tables, ReportFormat format) {
  std::string out;
  if (format == ReportFormat::kJson) {
    OJson root;
    root["tables"] = OJson::array();
    for (const auto& t : tables) {
      OJson jt;
      jt["name"] = t.name;
      jt["title"] = t.title;
      jt["columns"] = t.columns;
      jt["rows"] = OJson::array();
      for (const auto& row : t.rows) {
        OJson jr;
        for (std::size_t c = 0; c < t.columns.size() && c < row.size(); ++c) {
          jr[t.columns[c]] = cell_json(row[c]);
        }
        jt["rows"].push_back(std::move(jr));
      }
      root["tables"].push_back(std::move(jt));
    }
    return root.dump(2) + "\n";
  }
  for (std::size_t i = 0; i < tables.size(); ++i) {
    const Table& t = tables[i];
    if (i > 0) out += "\n";
    if (format == ReportFormat::kMarkdown) {
      out += "## " + t.title + "\n\n|";
      for (const auto& c : t.columns) out += " " + md_escape(c) + " |";
      out += "\n|";
      for (std::size_t c = 0; c < t.columns.size(); ++c) out += c == 0 ? " --- |" : " ---: |";
      out += "\n";
      for (const auto& row : t.rows) {
        out += "|";
        for (const auto& cell : row) out += " " + md_escape(cell_text(cell)) + " |";
        out += "\n";
      }
      if (!t.notes.empty()) {
        out += "\n";
        for (const auto& n : t.notes) out += n + "\n";
      }
    } else {
      out += "# " + t.name + "\n";
      for (std::size_t c = 0; c < t.columns.size(); ++c) {
        out += (c ? "," : "") + csv_escape(t.columns[c]);
      }
      out += "\n";
      for (const auto& row : t.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
          out += (c ? "," : "") + csv_escape(cell_text(row[c]));
        }
        out += "\n";
      }
    }
  }
  return out;
}

std::string bridge_beeswarm_json(const BridgeReport& r) {
  OJson root;
  root["features"] = OJson::array();
  for (RubricId id : kCanonicalRubrics) root["features"].push_back(std::string(rubric_key(id)));
  root["polarity"] = r.polarity == FeaturePolarity::kViolation ? "violation" : "satisfied";
  root["base_value"] = r.base_value;
  root["runs"] = OJson::array();
  for (std::size_t i = 0; i < r.run_ids.size(); ++i) {
    OJson run;
    run["run_id"] = r.run_ids[i];
    run["values"] = r.features[i];
    run["shap"] = r.local_shap[i];
    root["runs"].push_back(std::move(run));
  }
  return root.dump() + "\n";
}

}  // namespace tracexp
