#pragma once

#include <array>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "tracexp/rubric.hpp"
#include "tracexp/trace_model.hpp"

namespace tracexp {

// Per-run rubric flags; 1 means the rubric was violated.
struct FlagVector {
  std::string run_id;
  std::array<std::uint8_t, kNumRubrics> flags{};

  std::uint8_t operator[](RubricId id) const { return flags[rubric_index(id)]; }
  std::uint8_t& operator[](RubricId id) { return flags[rubric_index(id)]; }
  bool operator==(const FlagVector&) const = default;
};

// Flag vectors aligned with task outcomes, in corpus order.
struct FlagMatrix {
  std::vector<FlagVector> rows;
  std::vector<bool> success;  // success[i] is the outcome of rows[i]

  std::size_t size() const { return rows.size(); }
  bool empty() const { return rows.empty(); }
  std::vector<std::string> run_ids() const;
};

// Deterministic trace-only judge. Never reads t.outcome. Rubrics outside
// `rubrics` are reported as 0.
FlagVector judge_rules(const Trajectory& t, const RubricSet& rubrics = all_rubrics());

// Aligns flag vectors with outcomes by run_id, preserving vector order.
// Throws DuplicateRunId or MissingOutcome.
FlagMatrix aggregate(const std::vector<FlagVector>& vectors,
                     const std::map<std::string, Outcome>& outcomes);

std::map<std::string, Outcome> outcomes_of(const std::vector<Trajectory>& corpus);

// Flags file: one {"run_id":..,"flags":{<rubric_key>:0|1,...}} object per line.
void write_flags(std::ostream& out, const std::vector<FlagVector>& vectors);
std::vector<FlagVector> read_flags(std::istream& in);

nlohmann::ordered_json flags_to_json(const FlagVector& v);
FlagVector flags_from_json(const Json& j);

}  // namespace tracexp
