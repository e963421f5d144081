#pragma once

#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "tracexp/rng.hpp"
#include "tracexp/synth_env.hpp"
#include "tracexp/trace_model.hpp"

namespace tracexp::testing {

inline Step message_step(std::int64_t index, std::string content) {
  Step s;
  s.index = index;
  s.action.kind = ActionKind::kMessage;
  s.action.content = std::move(content);
  return s;
}

inline Step tool_step(std::int64_t index, std::string tool, Json args, bool error = false) {
  Step s;
  s.index = index;
  s.action.kind = ActionKind::kToolCall;
  s.action.tool_name = std::move(tool);
  s.action.arguments = std::move(args);
  Observation o;
  o.kind = ObservationKind::kToolResult;
  o.is_error = error;
  if (error) {
    o.payload = Json{{"code", "timeout"}};
  } else {
    o.payload = Json{{"ok", true}};
  }
  s.observation = o;
  return s;
}

inline Trajectory simple_trajectory(std::string run_id, std::size_t n_tool_calls,
                                    bool success = true) {
  Trajectory t;
  t.run_id = std::move(run_id);
  t.task_id = "task";
  t.benchmark = "unit";
  t.steps.push_back(message_step(0, "start"));
  for (std::size_t i = 0; i < n_tool_calls; ++i) {
    t.steps.push_back(tool_step(static_cast<std::int64_t>(i + 1), "tool" + std::to_string(i % 2),
                                Json{{"i", i}}));
  }
  t.steps.push_back(message_step(static_cast<std::int64_t>(n_tool_calls + 1), "done"));
  t.outcome.success = success;
  return t;
}

inline synth::FaultSpec uniform_faults(double p, std::uint64_t seed = 0) {
  synth::FaultSpec f;
  f.probability.fill(p);
  f.seed = seed;
  return f;
}

inline synth::OutcomeModel default_outcome() {
  synth::OutcomeModel m;
  m.bias = 1.0;
  m.weights = {-1.0, -0.5, -0.8, -0.6, -1.5, -0.3};
  return m;
}

// Two-class corpus: each document mixes class words with shared filler.
struct TextCorpus {
  std::vector<std::string> texts;
  std::vector<int> labels;
};

inline TextCorpus separable_corpus(std::size_t n, std::uint64_t seed, std::size_t class_words = 4,
                                   std::size_t filler_words = 10) {
  static const std::vector<std::string> pos = {"salary", "benefits", "remote", "career",
                                               "growth", "bonus",    "training", "mentor"};
  static const std::vector<std::string> neg = {"wire", "fee",  "urgent",     "cash",
                                               "upfront", "easy", "guaranteed", "transfer"};
  static const std::vector<std::string> filler = {
      "job", "role", "work", "company", "apply", "position", "office", "manager",
      "skills", "experience", "daily", "project", "schedule", "location", "shift", "hours"};
  Rng rng(seed);
  TextCorpus c;
  for (std::size_t i = 0; i < n; ++i) {
    const int y = static_cast<int>(i % 2);
    std::vector<std::string> words;
    const auto& cls = y == 1 ? neg : pos;
    for (std::size_t k = 0; k < class_words; ++k) words.push_back(cls[rng.index(cls.size())]);
    for (std::size_t k = 0; k < filler_words; ++k) words.push_back(filler[rng.index(filler.size())]);
    rng.shuffle(words);
    std::string text;
    for (const auto& w : words) text += (text.empty() ? "" : " ") + w;
    c.texts.push_back(std::move(text));
    c.labels.push_back(y);
  }
  return c;
}

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "tracexp-XXXXXX").string();
    char* p = ::mkdtemp(tmpl.data());
    path_ = p ? std::filesystem::path(p) : std::filesystem::path(tmpl);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace tracexp::testing
