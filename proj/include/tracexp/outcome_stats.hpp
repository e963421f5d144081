#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tracexp/rubric.hpp"
#include "tracexp/rubric_judge.hpp"

namespace tracexp {

// 2x2 cross-tabulation of one rubric flag against task outcome.
//            failure  success
//   flag        a        c
//   no flag     b        d
struct ContingencyTable {
  RubricId rubric = RubricId::kIntentAlignment;
  std::int64_t a = 0;
  std::int64_t b = 0;
  std::int64_t c = 0;
  std::int64_t d = 0;

  std::int64_t total() const { return a + b + c + d; }
  bool operator==(const ContingencyTable&) const = default;
};

// A ratio of two conditional frequencies. 0/0 is kept distinct from both +inf
// and NaN so reports can print it explicitly.
struct Ratio {
  enum class Kind { kFinite, kInfinite, kUndefined };
  Kind kind = Kind::kUndefined;
  double value = 0.0;  // meaningful only when kind == kFinite

  static Ratio finite(double v) { return {Kind::kFinite, v}; }
  static Ratio infinite() { return {Kind::kInfinite, 0.0}; }
  static Ratio undefined() { return {Kind::kUndefined, 0.0}; }

  bool is_finite() const { return kind == Kind::kFinite; }
  bool is_infinite() const { return kind == Kind::kInfinite; }
  bool is_undefined() const { return kind == Kind::kUndefined; }
  bool operator==(const Ratio&) const = default;
};

struct PrevalenceResult {
  double p_flag_given_failure = 0.0;
  double p_flag_given_success = 0.0;
  double delta = 0.0;  // p_flag_given_failure - p_flag_given_success
  Ratio ratio;
};

struct ReliabilityResult {
  std::optional<double> p_success_given_flag;    // undefined when a + c == 0
  std::optional<double> p_success_given_noflag;  // undefined when b + d == 0
  std::optional<double> delta;
  Ratio rr;
};

// Throws EmptyMatrix.
ContingencyTable build_contingency(const FlagMatrix& m, RubricId rubric);

// Throws DegenerateOutcomeClass unless both outcome classes are present.
PrevalenceResult prevalence(const ContingencyTable& ct);

ReliabilityResult reliability(const ContingencyTable& ct);

enum Annotation : std::uint8_t {
  kNoAnnotation = 0,
  kBest = 1,
  kSecondBest = 2,
  kWorst = 4,
};

struct StatsRow {
  RubricId rubric = RubricId::kIntentAlignment;
  ContingencyTable table;
  PrevalenceResult prevalence;
  ReliabilityResult reliability;
  std::uint8_t prevalence_annotation = kNoAnnotation;   // bitmask of Annotation
  std::uint8_t reliability_annotation = kNoAnnotation;
};

struct StatsReport {
  std::vector<StatsRow> rows;  // canonical rubric order
  std::int64_t n_runs = 0;
  std::int64_t n_success = 0;
  std::int64_t n_failure = 0;
  std::vector<std::string> run_ids;
};

// Per-rubric prevalence and reliability with best/second-best/worst marks:
// prevalence ranks by delta (lowest best), reliability by RR (highest best,
// undefined RR unranked). Ties go to the canonically earlier rubric.
StatsReport stats_report(const FlagMatrix& m);

}  // namespace tracexp
