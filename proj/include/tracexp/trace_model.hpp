#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

namespace tracexp {

// Opaque structured values (state snapshots, tool arguments, payloads, meta).
// nlohmann::json keeps object keys sorted, which gives opaque maps a canonical
// serialization for free.
using Json = nlohmann::json;

inline constexpr int kTraceSchemaVersion = 1;

enum class ActionKind { kMessage, kToolCall };
enum class ObservationKind { kToolResult, kEnvFeedback };

struct Action {
  ActionKind kind = ActionKind::kMessage;
  std::string tool_name;           // required iff kind == kToolCall
  std::optional<Json> arguments;   // object; absent for messages
  std::optional<std::string> rationale;
  std::optional<std::string> content;  // message text, messages only

  bool operator==(const Action&) const = default;
};

struct Observation {
  ObservationKind kind = ObservationKind::kToolResult;
  std::optional<Json> payload;  // present unless is_error
  bool is_error = false;

  bool operator==(const Observation&) const = default;
};

struct Step {
  std::int64_t index = 0;
  Json state = Json::object();
  Action action;
  std::optional<Observation> observation;

  bool operator==(const Step&) const = default;
};

struct Outcome {
  bool success = false;
  std::optional<double> score;  // in [0, 1]

  bool operator==(const Outcome&) const = default;
};

struct Trajectory {
  std::string run_id;
  std::string task_id;
  std::string benchmark;
  std::vector<Step> steps;
  Outcome outcome;
  Json meta = Json::object();

  bool operator==(const Trajectory&) const = default;
};

// A structural rule broken at a given step position (`step` is the position in
// the step list, or -1 for trajectory-level rules).
struct IntegrityViolation {
  std::string rule_id;
  std::int64_t step = -1;

  std::string to_string() const;  // "rule_id@step"
  bool operator==(const IntegrityViolation&) const = default;
};

namespace rule {
inline constexpr const char* kNoSteps = "no_steps";
inline constexpr const char* kNonContiguousIndex = "non_contiguous_index";
inline constexpr const char* kUnansweredToolCall = "unanswered_tool_call";
inline constexpr const char* kMissingToolName = "missing_tool_name";
inline constexpr const char* kMessageWithArguments = "message_with_arguments";
inline constexpr const char* kMissingPayload = "missing_payload";
inline constexpr const char* kScoreOutOfRange = "score_out_of_range";
inline constexpr const char* kSuccessWithZeroScore = "success_with_zero_score";
}  // namespace rule

struct TraceDigest {
  std::size_t step_count = 0;
  std::size_t tool_call_count = 0;
  std::size_t error_observation_count = 0;
  std::vector<std::string> distinct_tools;  // sorted

  bool operator==(const TraceDigest&) const = default;
};

enum class ParseMode {
  // Field-level schema checks only; structural problems (index gaps,
  // unanswered tool calls) are left for validate_trajectory to report.
  kLenient,
  // Additionally rejects any record with integrity violations.
  kStrict,
};

// Parses a line-delimited corpus, one canonical JSON record per line. Blank
// lines are skipped. Throws MalformedRecord or DuplicateRunId.
std::vector<Trajectory> parse_trace_corpus(std::istream& source,
                                           ParseMode mode = ParseMode::kLenient);

// Parses a single record; `line_no` is only used for error messages.
Trajectory parse_trajectory(std::string_view line, std::size_t line_no = 1,
                            ParseMode mode = ParseMode::kLenient);

std::vector<IntegrityViolation> validate_trajectory(const Trajectory& t);

TraceDigest trace_digest(const Trajectory& t);

// Canonical serialization: schema keys in fixed order, opaque maps with sorted
// keys, no insignificant whitespace, no trailing newline.
std::string serialize_trajectory(const Trajectory& t);

// Writes one canonical record per line, each terminated by '\n'.
void write_trace_corpus(std::ostream& out, const std::vector<Trajectory>& corpus);

// The JSON view used for serialization; `include_outcome = false` yields the
// outcome-blind rendering handed to judges.
nlohmann::ordered_json trajectory_to_json(const Trajectory& t, bool include_outcome = true);
nlohmann::ordered_json step_to_json(const Step& s);

std::string_view to_string(ActionKind kind);
std::string_view to_string(ObservationKind kind);

}  // namespace tracexp
