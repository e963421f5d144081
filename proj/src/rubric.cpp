#include "tracexp/rubric.hpp"

namespace tracexp {

namespace {

struct RubricText {
  std::string_view key;
  std::string_view name;
  std::string_view description;
};

constexpr std::array<RubricText, kNumRubrics> kRubricText = {{
    {"intent_alignment", "Intent Alignment",
     "Every action serves the user's stated goal and task requirements; no "
     "tool call pursues an objective the user did not ask for."},
    {"plan_adherence", "Plan Adherence",
     "The agent follows a coherent multi-step plan: sub-tasks are executed in "
     "the planned order, without skipping ahead or doubling back."},
    {"tool_correctness", "Tool Correctness",
     "Tools are invoked with valid, complete parameters; no call is rejected "
     "by the environment as malformed."},
    {"tool_choice_accuracy", "Tool Choice Accuracy",
     "For each sub-task the agent selects the appropriate tool from the tools "
     "available to it."},
    {"state_tracking_consistency", "State Tracking Consistency",
     "Facts the agent has learned from observations are carried forward "
     "unchanged in its internal state; nothing is dropped or silently "
     "replaced by a stale value."},
    {"error_recovery", "Error Awareness & Recovery",
     "Whenever an observation reports an error, the agent's next action "
     "addresses it by retrying or by taking an alternate action for the same "
     "sub-task."},
}};

}  // namespace

std::string_view rubric_key(RubricId id) { return kRubricText[rubric_index(id)].key; }

std::string_view rubric_display_name(RubricId id) {
  return kRubricText[rubric_index(id)].name;
}

std::optional<RubricId> parse_rubric_key(std::string_view key) {
  for (RubricId id : kCanonicalRubrics) {
    if (rubric_key(id) == key) return id;
  }
  return std::nullopt;
}

const std::vector<Rubric>& rubric_registry() {
  static const std::vector<Rubric> registry = [] {
    std::vector<Rubric> out;
    for (RubricId id : kCanonicalRubrics) {
      const auto& text = kRubricText[rubric_index(id)];
      out.push_back({id, std::string(text.name), std::string(text.description)});
    }
    return out;
  }();
  return registry;
}

}  // namespace tracexp
