#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tracexp/rubric_judge.hpp"

namespace tracexp {

struct JudgeConfig {
  // Full chat-completions URL, e.g. http://127.0.0.1:8000/v1/chat/completions
  std::string endpoint;
  std::string model = "gpt-5";
  std::string api_key;          // sent as a bearer token when non-empty
  double temperature = 0.1;
  int max_in_flight = 4;
  int retry_budget = 3;         // retries after the first attempt
  double timeout_s = 60.0;
  double backoff_initial_s = 0.5;  // doubled on each retry
  std::optional<std::filesystem::path> audit_log;  // request/reply .jsonl

  void validate() const;  // throws DataError
};

// Builds the chat-completions request body. The rendered trace never contains
// the trajectory outcome.
std::string build_judge_request(const Trajectory& t, const RubricSet& rubrics,
                                const JudgeConfig& cfg);

// Renders the user prompt for `t` (template asset + rubric block + trace).
std::string render_judge_prompt(const Trajectory& t, const RubricSet& rubrics);

// Parses a chat-completions reply body into flags. The assistant message must
// be a single JSON object mapping exactly the requested rubric ids to 0 or 1;
// anything else raises JudgeParse.
FlagVector parse_judge_reply(const std::string& body, const std::string& run_id,
                             const RubricSet& rubrics);

// Single-pass remote judgement of one trajectory. Retries transport failures
// (no response, 429, 5xx) with exponential backoff; throws JudgeTransport when
// the budget is exhausted or on other non-2xx statuses, JudgeParse on a
// non-conforming reply.
FlagVector judge_llm(const Trajectory& t, const RubricSet& rubrics, const JudgeConfig& cfg);

// Judges a corpus with at most cfg.max_in_flight concurrent requests; results
// are in corpus order.
std::vector<FlagVector> judge_llm_corpus(const std::vector<Trajectory>& corpus,
                                         const RubricSet& rubrics, const JudgeConfig& cfg);

}  // namespace tracexp
