#include "tracexp/llm_judge.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <regex>
#include <thread>

#include "httplib.h"
#include "tracexp/errors.hpp"
#include "tracexp/prompt_asset.hpp"

namespace tracexp {

namespace {

constexpr const char* kSystemMessage =
    "You are a careful auditor of agent execution traces. Judge only what the "
    "trace shows.";

struct Url {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Url split_url(const std::string& url) {
  static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, kUrl)) {
    throw DataError("judge endpoint is not an http(s) URL: " + url);
  }
  return {m[1].str(), m[2].matched ? m[2].str() : std::string("/")};
}

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
}

std::mutex& audit_mutex() {
  static std::mutex m;
  return m;
}

void audit(const JudgeConfig& cfg, const std::string& run_id, int attempt,
           const std::string& request, int status, const std::string& reply) {
  if (!cfg.audit_log) return;
  nlohmann::ordered_json line;
  line["run_id"] = run_id;
  line["attempt"] = attempt;
  line["request"] = nlohmann::ordered_json::parse(request);
  line["status"] = status;
  line["reply"] = reply;
  std::lock_guard lock(audit_mutex());
  std::ofstream out(*cfg.audit_log, std::ios::app);
  out << line.dump() << '\n';
}

}  // namespace

void JudgeConfig::validate() const {
  if (endpoint.empty()) throw DataError("judge endpoint is not configured");
  split_url(endpoint);
  if (!(temperature >= 0.0)) throw DataError("judge temperature must be >= 0");
  if (max_in_flight < 1) throw DataError("max_in_flight must be positive");
  if (retry_budget < 0) throw DataError("retry_budget must be non-negative");
  if (!(timeout_s > 0.0)) throw DataError("judge timeout must be positive");
}

std::string render_judge_prompt(const Trajectory& t, const RubricSet& rubrics) {
  std::string rubric_block;
  std::string rubric_keys;
  for (const Rubric& r : rubric_registry()) {
    if (!rubrics.contains(r.id)) continue;
    rubric_block += "- " + std::string(rubric_key(r.id)) + " (" + r.name + "): " + r.description + "\n";
    if (!rubric_keys.empty()) rubric_keys += ", ";
    rubric_keys += rubric_key(r.id);
  }
  if (!rubric_block.empty()) rubric_block.pop_back();

  nlohmann::ordered_json header;
  header["run_id"] = t.run_id;
  header["task_id"] = t.task_id;
  header["benchmark"] = t.benchmark;
  std::string trace = header.dump();
  for (const Step& s : t.steps) trace += "\n" + step_to_json(s).dump();

  std::string prompt(assets::kJudgePromptV1);
  replace_all(prompt, "{{RUBRIC_BLOCK}}", rubric_block);
  replace_all(prompt, "{{RUBRIC_KEYS}}", rubric_keys);
  replace_all(prompt, "{{TRACE}}", trace);
  return prompt;
}

std::string build_judge_request(const Trajectory& t, const RubricSet& rubrics,
                                const JudgeConfig& cfg) {
  nlohmann::ordered_json body;
  body["model"] = cfg.model;
  body["temperature"] = cfg.temperature;
  body["messages"] = nlohmann::ordered_json::array(
      {{{"role", "system"}, {"content", kSystemMessage}},
       {{"role", "user"}, {"content", render_judge_prompt(t, rubrics)}}});
  return body.dump();
}

FlagVector parse_judge_reply(const std::string& body, const std::string& run_id,
                             const RubricSet& rubrics) {
  Json reply;
  try {
    reply = Json::parse(body);
  } catch (const nlohmann::json::parse_error&) {
    throw JudgeParse("reply body is not JSON");
  }
  const Json* content = nullptr;
  if (reply.is_object() && reply.contains("choices") && reply["choices"].is_array() &&
      !reply["choices"].empty()) {
    const Json& choice = reply["choices"][0];
    if (choice.is_object() && choice.contains("message") && choice["message"].is_object() &&
        choice["message"].contains("content")) {
      content = &choice["message"]["content"];
    }
  }
  if (content == nullptr || !content->is_string()) {
    throw JudgeParse("reply has no choices[0].message.content string");
  }
  Json labels;
  try {
    labels = Json::parse(content->get<std::string>());
  } catch (const nlohmann::json::parse_error&) {
    throw JudgeParse("assistant content is not a bare JSON object");
  }
  if (!labels.is_object()) throw JudgeParse("assistant content is not a JSON object");
  if (labels.size() != rubrics.size()) {
    throw JudgeParse("expected " + std::to_string(rubrics.size()) + " rubric keys, got " +
                     std::to_string(labels.size()));
  }
  FlagVector v;
  v.run_id = run_id;
  for (const auto& [key, value] : labels.items()) {
    auto id = parse_rubric_key(key);
    if (!id || !rubrics.contains(*id)) throw JudgeParse("unexpected key `" + key + "`");
    if (!value.is_number_integer()) throw JudgeParse("value for `" + key + "` is not an integer");
    const auto x = value.get<std::int64_t>();
    if (x != 0 && x != 1) throw JudgeParse("value for `" + key + "` is not 0 or 1");
    v[*id] = static_cast<std::uint8_t>(x);
  }
  return v;
}

FlagVector judge_llm(const Trajectory& t, const RubricSet& rubrics, const JudgeConfig& cfg) {
  cfg.validate();
  const Url url = split_url(cfg.endpoint);
  const std::string request = build_judge_request(t, rubrics, cfg);

  httplib::Client client(url.origin);
  const auto timeout = std::chrono::duration<double>(cfg.timeout_s);
  client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  httplib::Headers headers;
  if (!cfg.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg.api_key);

  int last_status = -1;
  std::string last_detail = "no attempt made";
  for (int attempt = 0; attempt <= cfg.retry_budget; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(
          std::chrono::duration<double>(cfg.backoff_initial_s * std::ldexp(1.0, attempt - 1)));
    }
    auto res = client.Post(url.path, headers, request, "application/json");
    if (!res) {
      last_status = -1;
      last_detail = httplib::to_string(res.error());
      audit(cfg, t.run_id, attempt, request, -1, "");
      continue;
    }
    audit(cfg, t.run_id, attempt, request, res->status, res->body);
    if (res->status >= 200 && res->status < 300) {
      return parse_judge_reply(res->body, t.run_id, rubrics);
    }
    last_status = res->status;
    last_detail = res->body.substr(0, 200);
    if (res->status != 429 && res->status < 500) break;
  }
  throw JudgeTransport(last_status, last_detail);
}

std::vector<FlagVector> judge_llm_corpus(const std::vector<Trajectory>& corpus,
                                         const RubricSet& rubrics, const JudgeConfig& cfg) {
  cfg.validate();
  std::vector<FlagVector> results(corpus.size());
  std::vector<std::exception_ptr> errors(corpus.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < corpus.size(); i = next++) {
      try {
        results[i] = judge_llm(corpus[i], rubrics, cfg);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  {
    const std::size_t n_workers =
        std::min<std::size_t>(static_cast<std::size_t>(cfg.max_in_flight), corpus.size());
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

}  // namespace tracexp
