#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tracexp/bridge.hpp"
#include "tracexp/outcome_stats.hpp"
#include "tracexp/static_xai/stability.hpp"

namespace tracexp {

enum class ReportFormat { kMarkdown, kCsv, kJson };

ReportFormat parse_report_format(std::string_view s);  // throws DataError
std::string_view extension(ReportFormat f);            // "md", "csv", "json"

inline constexpr std::string_view kInfinity = "∞";
inline constexpr std::string_view kUndefined = "—";

// A cell is either a number (printed with 3 decimals), an integer, a
// sentinel, or text.
struct Cell {
  enum class Kind { kNumber, kInteger, kText, kInfinity, kUndefined };
  Kind kind = Kind::kText;
  double number = 0.0;
  long long integer = 0;
  std::string text;

  static Cell num(double v);
  static Cell integer_cell(long long v);
  static Cell str(std::string s);
  static Cell inf();
  static Cell undefined();
  static Cell of(const Ratio& r);
  static Cell of(const std::optional<double>& v);
};

std::string format_number(double v);  // 3 decimals, never "-0.000"

struct Table {
  std::string name;   // machine key, e.g. "prevalence"
  std::string title;  // human heading
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  std::vector<std::string> notes;  // markdown-only footnotes
};

Table prevalence_table(const StatsReport& r);
Table reliability_table(const StatsReport& r);
Table contingency_table(const StatsReport& r);
Table bridge_table(const BridgeReport& r);
Table paradigm_table(const ParadigmSummary& s);
Table stability_table(const xai::StabilityResult& r, const xai::StabilityConfig& config);

// Markdown: headed pipe tables. CSV: one table per block, blocks separated by
// a blank line, first line "# <name>". JSON: {"tables":[...]}.
std::string render_report(const std::vector<Table>& tables, ReportFormat format);

// Per-run per-rubric SHAP values and feature values for beeswarm plots.
std::string bridge_beeswarm_json(const BridgeReport& r);

}  // namespace tracexp
