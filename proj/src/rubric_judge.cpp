#include "tracexp/rubric_judge.hpp"

#include <optional>
#include <unordered_set>

#include "tracexp/errors.hpp"
#include "tracexp/trace_conventions.hpp"

namespace tracexp {

namespace conv = tracexp::conventions;

namespace {

const Json* find_path(const Json& j, std::initializer_list<const char*> path) {
  const Json* cur = &j;
  for (const char* key : path) {
    if (!cur->is_object()) return nullptr;
    auto it = cur->find(key);
    if (it == cur->end()) return nullptr;
    cur = &*it;
  }
  return cur;
}

std::optional<std::string> find_string(const Json& j, std::initializer_list<const char*> path) {
  const Json* v = find_path(j, path);
  if (v == nullptr || !v->is_string()) return std::nullopt;
  return v->get<std::string>();
}

std::optional<std::string> argument(const Step& s, const char* key) {
  if (!s.action.arguments) return std::nullopt;
  return find_string(*s.action.arguments, {key});
}

bool is_tool_call(const Step& s) { return s.action.kind == ActionKind::kToolCall; }

bool is_error_with_code(const Step& s, const char* code) {
  if (!s.observation || !s.observation->is_error || !s.observation->payload) return false;
  return find_string(*s.observation->payload, {conv::kErrorCode}) == code;
}

// Position of plan item `id` in the step's plan, if any.
std::optional<std::size_t> plan_position(const Json& state, const std::string& id) {
  const Json* plan = find_path(state, {conv::kPlan});
  if (plan == nullptr || !plan->is_array()) return std::nullopt;
  for (std::size_t i = 0; i < plan->size(); ++i) {
    if (find_string((*plan)[i], {conv::kPlanItemId}) == id) return i;
  }
  return std::nullopt;
}

bool violates_intent(const Trajectory& t) {
  for (const Step& s : t.steps) {
    if (!is_tool_call(s)) continue;
    auto goal = find_string(s.state, {conv::kUserRequest, conv::kIntent});
    auto claimed = argument(s, conv::kIntent);
    if (goal && claimed && *goal != *claimed) return true;
  }
  return false;
}

// Sub-tasks must be worked in plan order: the first one is plan[0] and every
// switch moves exactly one position forward.
bool violates_plan(const Trajectory& t) {
  std::optional<std::size_t> current;
  for (const Step& s : t.steps) {
    if (!is_tool_call(s)) continue;
    auto subtask = argument(s, conv::kSubtask);
    if (!subtask || find_path(s.state, {conv::kPlan}) == nullptr) continue;
    auto pos = plan_position(s.state, *subtask);
    if (!pos) return true;  // off-plan work
    if (!current) {
      if (*pos != 0) return true;
    } else if (*pos != *current && *pos != *current + 1) {
      return true;
    }
    current = pos;
  }
  return false;
}

bool violates_tool_correctness(const Trajectory& t) {
  for (const Step& s : t.steps) {
    if (is_tool_call(s) && is_error_with_code(s, conv::kInvalidArguments)) return true;
  }
  return false;
}

bool violates_tool_choice(const Trajectory& t) {
  for (const Step& s : t.steps) {
    if (!is_tool_call(s)) continue;
    auto subtask = argument(s, conv::kSubtask);
    if (!subtask) continue;
    auto pos = plan_position(s.state, *subtask);
    if (!pos) continue;
    auto op = find_string(s.state[conv::kPlan][*pos], {conv::kPlanItemOp});
    if (!op) continue;
    const Json* catalog = find_path(s.state, {conv::kToolCatalog});
    if (catalog == nullptr) continue;
    auto expected = find_string(*catalog, {op->c_str()});
    if (expected && *expected != s.action.tool_name) return true;
  }
  return false;
}

// Every fact returned by a successful observation must be carried forward,
// unchanged, in the `known` map of all later states.
bool violates_state_tracking(const Trajectory& t) {
  std::vector<std::pair<std::string, Json>> learned;
  for (const Step& s : t.steps) {
    if (!learned.empty()) {
      const Json* known = find_path(s.state, {conv::kKnown});
      for (const auto& [key, value] : learned) {
        if (known == nullptr || !known->is_object()) return true;
        auto it = known->find(key);
        if (it == known->end() || *it != value) return true;
      }
    }
    if (s.observation && !s.observation->is_error && s.observation->payload) {
      const Json* facts = find_path(*s.observation->payload, {conv::kFacts});
      if (facts != nullptr && facts->is_object()) {
        for (const auto& [key, value] : facts->items()) learned.emplace_back(key, value);
      }
    }
  }
  return false;
}

// An error observation must be followed by a corrective tool call: a retry of
// the same tool or another call for the same sub-task.
bool violates_error_recovery(const Trajectory& t) {
  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    const Step& s = t.steps[i];
    if (!s.observation || !s.observation->is_error) continue;
    const Step* next = nullptr;
    for (std::size_t j = i + 1; j < t.steps.size(); ++j) {
      if (is_tool_call(t.steps[j])) {
        next = &t.steps[j];
        break;
      }
    }
    if (next == nullptr) return true;
    if (!is_tool_call(s)) continue;  // any follow-up call addresses env errors
    // With sub-task annotations, corrective means "same sub-task"; without
    // them, fall back to retrying the same tool.
    auto failed_subtask = argument(s, conv::kSubtask);
    if (failed_subtask) {
      if (argument(*next, conv::kSubtask) != failed_subtask) return true;
    } else if (next->action.tool_name != s.action.tool_name) {
      return true;
    }
  }
  return false;
}

}  // namespace

std::vector<std::string> FlagMatrix::run_ids() const {
  std::vector<std::string> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.run_id);
  return out;
}

FlagVector judge_rules(const Trajectory& t, const RubricSet& rubrics) {
  FlagVector v;
  v.run_id = t.run_id;
  for (RubricId id : rubrics) {
    bool violated = false;
    switch (id) {
      case RubricId::kIntentAlignment:
        violated = violates_intent(t);
        break;
      case RubricId::kPlanAdherence:
        violated = violates_plan(t);
        break;
      case RubricId::kToolCorrectness:
        violated = violates_tool_correctness(t);
        break;
      case RubricId::kToolChoiceAccuracy:
        violated = violates_tool_choice(t);
        break;
      case RubricId::kStateTrackingConsistency:
        violated = violates_state_tracking(t);
        break;
      case RubricId::kErrorRecovery:
        violated = violates_error_recovery(t);
        break;
    }
    v[id] = violated ? 1 : 0;
  }
  return v;
}

FlagMatrix aggregate(const std::vector<FlagVector>& vectors,
                     const std::map<std::string, Outcome>& outcomes) {
  FlagMatrix m;
  std::unordered_set<std::string> seen;
  for (const FlagVector& v : vectors) {
    if (!seen.insert(v.run_id).second) throw DuplicateRunId(v.run_id);
    auto it = outcomes.find(v.run_id);
    if (it == outcomes.end()) throw MissingOutcome(v.run_id);
    m.rows.push_back(v);
    m.success.push_back(it->second.success);
  }
  return m;
}

std::map<std::string, Outcome> outcomes_of(const std::vector<Trajectory>& corpus) {
  std::map<std::string, Outcome> out;
  for (const Trajectory& t : corpus) {
    if (!out.emplace(t.run_id, t.outcome).second) throw DuplicateRunId(t.run_id);
  }
  return out;
}

nlohmann::ordered_json flags_to_json(const FlagVector& v) {
  nlohmann::ordered_json j;
  j["run_id"] = v.run_id;
  nlohmann::ordered_json flags;
  for (RubricId id : kCanonicalRubrics) flags[std::string(rubric_key(id))] = v[id];
  j["flags"] = flags;
  return j;
}

FlagVector flags_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("run_id") || !j["run_id"].is_string() ||
      !j.contains("flags") || !j["flags"].is_object()) {
    throw DataError("flag record needs string `run_id` and object `flags`");
  }
  FlagVector v;
  v.run_id = j["run_id"].get<std::string>();
  const Json& flags = j["flags"];
  if (flags.size() != kNumRubrics) throw DataError("flag record must carry all six rubrics");
  for (const auto& [key, value] : flags.items()) {
    auto id = parse_rubric_key(key);
    if (!id) throw DataError("unknown rubric `" + key + "`");
    if (!value.is_number_integer() || (value.get<int>() != 0 && value.get<int>() != 1)) {
      throw DataError("flag `" + key + "` must be 0 or 1");
    }
    v[*id] = static_cast<std::uint8_t>(value.get<int>());
  }
  return v;
}

void write_flags(std::ostream& out, const std::vector<FlagVector>& vectors) {
  for (const FlagVector& v : vectors) out << flags_to_json(v).dump() << '\n';
}

std::vector<FlagVector> read_flags(std::istream& in) {
  std::vector<FlagVector> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(flags_from_json(Json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw MalformedRecord(line_no, e.what());
    } catch (const DataError& e) {
      throw MalformedRecord(line_no, e.what());
    }
  }
  return out;
}

}  // namespace tracexp
