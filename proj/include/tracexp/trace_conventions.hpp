#pragma once

// Reserved field names that the rule judge reads from traces and the synthetic
// environment writes into them. Traces from other harnesses may use them too;
// rules whose fields are absent simply never fire.
//
//   state.user_request.intent   goal the user asked for
//   state.plan                  [{"id": .., "op": ..}, ...] in execution order
//   state.tool_catalog          {op: tool_name}
//   state.known                 facts the agent has learned so far
//   action.arguments.intent     goal a tool call claims to serve
//   action.arguments.subtask    plan item id a tool call works on
//   observation.payload.facts   facts returned by a successful tool call
//   observation.payload.code    error code of a failed tool call
namespace tracexp::conventions {

inline constexpr const char* kUserRequest = "user_request";
inline constexpr const char* kIntent = "intent";
inline constexpr const char* kPlan = "plan";
inline constexpr const char* kPlanItemId = "id";
inline constexpr const char* kPlanItemOp = "op";
inline constexpr const char* kToolCatalog = "tool_catalog";
inline constexpr const char* kKnown = "known";
inline constexpr const char* kSubtask = "subtask";
inline constexpr const char* kParams = "params";
inline constexpr const char* kFacts = "facts";
inline constexpr const char* kErrorCode = "code";

inline constexpr const char* kInvalidArguments = "invalid_arguments";
inline constexpr const char* kTimeout = "timeout";

}  // namespace tracexp::conventions
