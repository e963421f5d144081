#include "tracexp/trace_model.hpp"

#include <algorithm>
#include <initializer_list>
#include <set>
#include <string_view>
#include <unordered_set>

#include "tracexp/errors.hpp"

namespace tracexp {

namespace {

// Thrown inside the record parser and rethrown as MalformedRecord with the
// line number attached.
struct SchemaError {
  std::string reason;
};

[[noreturn]] void fail(std::string reason) { throw SchemaError{std::move(reason)}; }

void require_keys(const Json& obj, std::string_view where,
                  std::initializer_list<std::string_view> required,
                  std::initializer_list<std::string_view> optional) {
  if (!obj.is_object()) fail(std::string(where) + " must be an object");
  for (auto key : required) {
    if (!obj.contains(key)) fail("missing `" + std::string(key) + "` in " + std::string(where));
  }
  for (const auto& [key, value] : obj.items()) {
    auto matches = [&](std::string_view k) { return k == key; };
    if (std::none_of(required.begin(), required.end(), matches) &&
        std::none_of(optional.begin(), optional.end(), matches)) {
      fail("unknown key `" + key + "` in " + std::string(where));
    }
  }
}

std::string get_string(const Json& obj, const char* key, std::string_view where) {
  const Json& v = obj.at(key);
  if (!v.is_string()) fail("`" + std::string(key) + "` in " + std::string(where) + " must be a string");
  return v.get<std::string>();
}

bool get_bool(const Json& obj, const char* key, std::string_view where) {
  const Json& v = obj.at(key);
  if (!v.is_boolean()) fail("`" + std::string(key) + "` in " + std::string(where) + " must be a boolean");
  return v.get<bool>();
}

Action parse_action(const Json& j) {
  require_keys(j, "action", {"kind"}, {"tool_name", "arguments", "rationale", "content"});
  Action a;
  std::string kind = get_string(j, "kind", "action");
  if (kind == "message") {
    a.kind = ActionKind::kMessage;
  } else if (kind == "tool_call") {
    a.kind = ActionKind::kToolCall;
  } else {
    fail("unknown action kind `" + kind + "`");
  }
  if (j.contains("tool_name")) a.tool_name = get_string(j, "tool_name", "action");
  if (j.contains("arguments")) {
    if (!j["arguments"].is_object()) fail("`arguments` must be an object");
    a.arguments = j["arguments"];
  }
  if (j.contains("rationale")) a.rationale = get_string(j, "rationale", "action");
  if (j.contains("content")) a.content = get_string(j, "content", "action");
  return a;
}

Observation parse_observation(const Json& j) {
  require_keys(j, "observation", {"kind", "is_error"}, {"payload"});
  Observation o;
  std::string kind = get_string(j, "kind", "observation");
  if (kind == "tool_result") {
    o.kind = ObservationKind::kToolResult;
  } else if (kind == "env_feedback") {
    o.kind = ObservationKind::kEnvFeedback;
  } else {
    fail("unknown observation kind `" + kind + "`");
  }
  o.is_error = get_bool(j, "is_error", "observation");
  if (j.contains("payload")) o.payload = j["payload"];
  return o;
}

Step parse_step(const Json& j) {
  require_keys(j, "step", {"index", "state", "action"}, {"observation"});
  Step s;
  const Json& index = j["index"];
  if (!index.is_number_integer() || index.get<std::int64_t>() < 0) {
    fail("step `index` must be a non-negative integer");
  }
  s.index = index.get<std::int64_t>();
  if (!j["state"].is_object()) fail("step `state` must be an object");
  s.state = j["state"];
  s.action = parse_action(j["action"]);
  if (j.contains("observation")) s.observation = parse_observation(j["observation"]);
  return s;
}

Trajectory parse_record(const Json& j) {
  require_keys(j, "record", {"v", "run_id", "task_id", "benchmark", "steps", "outcome", "meta"}, {});
  if (!j["v"].is_number_integer() || j["v"].get<std::int64_t>() != kTraceSchemaVersion) {
    fail("unsupported schema version " + j["v"].dump());
  }
  Trajectory t;
  t.run_id = get_string(j, "run_id", "record");
  if (t.run_id.empty()) fail("`run_id` must be non-empty");
  t.task_id = get_string(j, "task_id", "record");
  t.benchmark = get_string(j, "benchmark", "record");
  if (!j["steps"].is_array()) fail("`steps` must be an array");
  for (const Json& step : j["steps"]) t.steps.push_back(parse_step(step));

  const Json& outcome = j["outcome"];
  require_keys(outcome, "outcome", {"success"}, {"score"});
  t.outcome.success = get_bool(outcome, "success", "outcome");
  if (outcome.contains("score")) {
    if (!outcome["score"].is_number()) fail("outcome `score` must be a number");
    t.outcome.score = outcome["score"].get<double>();
  }

  if (!j["meta"].is_object()) fail("`meta` must be an object");
  t.meta = j["meta"];
  return t;
}

void append_json_string(std::string& out, std::string_view s) {
  out += Json(std::string(s)).dump();
}

void append_action(std::string& out, const Action& a) {
  out += "{\"kind\":";
  append_json_string(out, to_string(a.kind));
  if (!a.tool_name.empty()) {
    out += ",\"tool_name\":";
    append_json_string(out, a.tool_name);
  }
  if (a.arguments) out += ",\"arguments\":" + a.arguments->dump();
  if (a.rationale) {
    out += ",\"rationale\":";
    append_json_string(out, *a.rationale);
  }
  if (a.content) {
    out += ",\"content\":";
    append_json_string(out, *a.content);
  }
  out += '}';
}

void append_observation(std::string& out, const Observation& o) {
  out += "{\"kind\":";
  append_json_string(out, to_string(o.kind));
  if (o.payload) out += ",\"payload\":" + o.payload->dump();
  out += o.is_error ? ",\"is_error\":true}" : ",\"is_error\":false}";
}

void append_step(std::string& out, const Step& s) {
  out += "{\"index\":" + std::to_string(s.index);
  out += ",\"state\":" + s.state.dump();
  out += ",\"action\":";
  append_action(out, s.action);
  if (s.observation) {
    out += ",\"observation\":";
    append_observation(out, *s.observation);
  }
  out += '}';
}

std::string serialize_impl(const Trajectory& t, bool include_outcome) {
  std::string out = "{\"v\":" + std::to_string(kTraceSchemaVersion);
  out += ",\"run_id\":";
  append_json_string(out, t.run_id);
  out += ",\"task_id\":";
  append_json_string(out, t.task_id);
  out += ",\"benchmark\":";
  append_json_string(out, t.benchmark);
  out += ",\"steps\":[";
  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    if (i) out += ',';
    append_step(out, t.steps[i]);
  }
  out += ']';
  if (include_outcome) {
    out += ",\"outcome\":{\"success\":";
    out += t.outcome.success ? "true" : "false";
    if (t.outcome.score) out += ",\"score\":" + Json(*t.outcome.score).dump();
    out += '}';
  }
  out += ",\"meta\":" + t.meta.dump() + '}';
  return out;
}

}  // namespace

std::string IntegrityViolation::to_string() const {
  return rule_id + "@" + std::to_string(step);
}

std::string_view to_string(ActionKind kind) {
  return kind == ActionKind::kToolCall ? "tool_call" : "message";
}

std::string_view to_string(ObservationKind kind) {
  return kind == ObservationKind::kToolResult ? "tool_result" : "env_feedback";
}

Trajectory parse_trajectory(std::string_view line, std::size_t line_no, ParseMode mode) {
  Json j;
  try {
    j = Json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw MalformedRecord(line_no, std::string("invalid JSON: ") + e.what());
  }
  Trajectory t;
  try {
    t = parse_record(j);
  } catch (const SchemaError& e) {
    throw MalformedRecord(line_no, e.reason);
  } catch (const nlohmann::json::exception& e) {
    throw MalformedRecord(line_no, e.what());
  }
  if (mode == ParseMode::kStrict) {
    auto violations = validate_trajectory(t);
    if (!violations.empty()) {
      throw MalformedRecord(line_no, "integrity violation " + violations.front().to_string());
    }
  }
  return t;
}

std::vector<Trajectory> parse_trace_corpus(std::istream& source, ParseMode mode) {
  std::vector<Trajectory> corpus;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(source, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    Trajectory t = parse_trajectory(line, line_no, mode);
    if (!seen.insert(t.run_id).second) throw DuplicateRunId(t.run_id);
    corpus.push_back(std::move(t));
  }
  return corpus;
}

std::vector<IntegrityViolation> validate_trajectory(const Trajectory& t) {
  std::vector<IntegrityViolation> out;
  if (t.steps.empty()) out.push_back({rule::kNoSteps, -1});
  for (std::size_t p = 0; p < t.steps.size(); ++p) {
    const Step& s = t.steps[p];
    const auto pos = static_cast<std::int64_t>(p);
    const std::int64_t expected = p == 0 ? 0 : t.steps[p - 1].index + 1;
    if (s.index != expected) out.push_back({rule::kNonContiguousIndex, pos});

    if (s.action.kind == ActionKind::kToolCall) {
      if (s.action.tool_name.empty()) out.push_back({rule::kMissingToolName, pos});
      const bool answered =
          s.observation && (s.observation->kind == ObservationKind::kToolResult ||
                            s.observation->is_error);
      if (!answered) out.push_back({rule::kUnansweredToolCall, pos});
    } else if (s.action.arguments) {
      out.push_back({rule::kMessageWithArguments, pos});
    }
    if (s.observation && !s.observation->is_error && !s.observation->payload) {
      out.push_back({rule::kMissingPayload, pos});
    }
  }
  if (t.outcome.score) {
    const double score = *t.outcome.score;
    if (!(score >= 0.0 && score <= 1.0)) {
      out.push_back({rule::kScoreOutOfRange, -1});
    } else if (t.outcome.success && score == 0.0) {
      out.push_back({rule::kSuccessWithZeroScore, -1});
    }
  }
  return out;
}

TraceDigest trace_digest(const Trajectory& t) {
  TraceDigest d;
  d.step_count = t.steps.size();
  std::set<std::string> tools;
  for (const Step& s : t.steps) {
    if (s.action.kind == ActionKind::kToolCall) {
      ++d.tool_call_count;
      tools.insert(s.action.tool_name);
    }
    if (s.observation && s.observation->is_error) ++d.error_observation_count;
  }
  d.distinct_tools.assign(tools.begin(), tools.end());
  return d;
}

std::string serialize_trajectory(const Trajectory& t) { return serialize_impl(t, true); }

void write_trace_corpus(std::ostream& out, const std::vector<Trajectory>& corpus) {
  for (const Trajectory& t : corpus) out << serialize_trajectory(t) << '\n';
}

nlohmann::ordered_json trajectory_to_json(const Trajectory& t, bool include_outcome) {
  return nlohmann::ordered_json::parse(serialize_impl(t, include_outcome));
}

nlohmann::ordered_json step_to_json(const Step& s) {
  std::string out;
  append_step(out, s);
  return nlohmann::ordered_json::parse(out);
}

}  // namespace tracexp
