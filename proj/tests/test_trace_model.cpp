#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "support.hpp"
#include "tracexp/errors.hpp"
#include "tracexp/synth_env.hpp"
#include "tracexp/trace_model.hpp"

namespace tracexp {
namespace {

using testing::message_step;
using testing::simple_trajectory;
using testing::tool_step;

std::vector<Trajectory> load_fixture() {
  std::ifstream in(std::string(TRACEXP_FIXTURE_DIR) + "/two_runs.jsonl");
  return parse_trace_corpus(in);
}

std::string replace_once(std::string s, const std::string& from, const std::string& to) {
  auto pos = s.find(from);
  if (pos != std::string::npos) s.replace(pos, from.size(), to);
  return s;
}

TEST(TraceModel, ParsesFixture) {
  auto corpus = load_fixture();
  ASSERT_EQ(corpus.size(), 2u);
  EXPECT_EQ(corpus[0].run_id, "fx-1");
  EXPECT_EQ(corpus[0].steps.size(), 3u);
  EXPECT_EQ(corpus[1].steps.size(), 5u);
  EXPECT_TRUE(corpus[0].outcome.success);
  ASSERT_TRUE(corpus[0].outcome.score);
  EXPECT_DOUBLE_EQ(*corpus[0].outcome.score, 1.0);
  EXPECT_FALSE(corpus[1].outcome.success);
  EXPECT_FALSE(corpus[1].outcome.score);
  EXPECT_EQ(corpus[0].steps[1].action.tool_name, "lookup");
  EXPECT_EQ(corpus[0].steps[1].action.arguments->at("q"), "x");
  EXPECT_EQ(corpus[1].steps[4].action.rationale, "finished");
  EXPECT_TRUE(corpus[1].steps[1].observation->is_error);
  EXPECT_EQ(corpus[0].meta.at("model"), "m");
  for (const auto& t : corpus) EXPECT_TRUE(validate_trajectory(t).empty());
}

TEST(TraceModel, DigestCounts) {
  auto corpus = load_fixture();
  TraceDigest d = trace_digest(corpus[1]);
  EXPECT_EQ(d.step_count, 5u);
  EXPECT_EQ(d.tool_call_count, 3u);
  EXPECT_EQ(d.error_observation_count, 1u);
  EXPECT_EQ(d.distinct_tools, (std::vector<std::string>{"book", "lookup"}));
  TraceDigest d0 = trace_digest(corpus[0]);
  EXPECT_EQ(d0.tool_call_count, 1u);
  EXPECT_EQ(d0.error_observation_count, 0u);
}

TEST(TraceModel, MissingOutcomeNamesLine) {
  std::ifstream in(std::string(TRACEXP_FIXTURE_DIR) + "/two_runs.jsonl");
  std::string l1, l2;
  std::getline(in, l1);
  std::getline(in, l2);
  auto pos = l2.find(",\"outcome\"");
  auto end = l2.find(",\"meta\"");
  ASSERT_NE(pos, std::string::npos);
  l2.erase(pos, end - pos);
  std::istringstream src(l1 + "\n" + l2 + "\n");
  try {
    parse_trace_corpus(src);
    FAIL() << "expected MalformedRecord";
  } catch (const MalformedRecord& e) {
    EXPECT_EQ(e.line_no(), 2u);
    EXPECT_NE(e.reason().find("outcome"), std::string::npos) << e.reason();
  }
}

TEST(TraceModel, RejectsSchemaProblems) {
  std::ifstream in(std::string(TRACEXP_FIXTURE_DIR) + "/two_runs.jsonl");
  std::string line;
  std::getline(in, line);
  EXPECT_THROW(parse_trajectory("{not json", 3), MalformedRecord);
  EXPECT_THROW(parse_trajectory(replace_once(line, "\"v\":1", "\"v\":2")), MalformedRecord);
  EXPECT_THROW(parse_trajectory(replace_once(line, "\"meta\"", "\"extra\":1,\"meta\"")),
               MalformedRecord);
  EXPECT_THROW(parse_trajectory(replace_once(line, "\"tool_call\"", "\"teleport\"")),
               MalformedRecord);
  EXPECT_THROW(parse_trajectory(replace_once(line, "\"success\":true", "\"success\":\"yes\"")),
               MalformedRecord);
  EXPECT_NO_THROW(parse_trajectory(line));
}

TEST(TraceModel, DuplicateRunId) {
  std::ifstream in(std::string(TRACEXP_FIXTURE_DIR) + "/two_runs.jsonl");
  std::string line;
  std::getline(in, line);
  std::istringstream src(line + "\n\n" + line + "\n");
  EXPECT_THROW(parse_trace_corpus(src), DuplicateRunId);
}

TEST(TraceModel, ValidationRules) {
  Trajectory t = simple_trajectory("r", 2);
  EXPECT_TRUE(validate_trajectory(t).empty());

  Trajectory gap = t;
  gap.steps[2].index = 3;  // indices 0,1,3,4
  gap.steps[3].index = 4;
  auto v = validate_trajectory(gap);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].to_string(), "non_contiguous_index@2");

  Trajectory unanswered = t;
  unanswered.steps[1].observation.reset();
  v = validate_trajectory(unanswered);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].to_string(), "unanswered_tool_call@1");

  Trajectory empty = t;
  empty.steps.clear();
  v = validate_trajectory(empty);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].rule_id, rule::kNoSteps);
  EXPECT_EQ(v[0].step, -1);

  Trajectory scored = t;
  scored.outcome.score = 0.0;
  v = validate_trajectory(scored);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].rule_id, rule::kSuccessWithZeroScore);
  scored.outcome.score = 1.5;
  EXPECT_EQ(validate_trajectory(scored)[0].rule_id, rule::kScoreOutOfRange);

  Trajectory chatty = t;
  chatty.steps[0].action.arguments = Json::object();
  EXPECT_EQ(validate_trajectory(chatty)[0].rule_id, rule::kMessageWithArguments);
}

TEST(TraceModel, StrictModeRejectsIntegrityViolations) {
  Trajectory t = simple_trajectory("r", 2);
  t.steps[2].index = 7;
  const std::string line = serialize_trajectory(t);
  EXPECT_NO_THROW(parse_trajectory(line, 1, ParseMode::kLenient));
  try {
    parse_trajectory(line, 9, ParseMode::kStrict);
    FAIL();
  } catch (const MalformedRecord& e) {
    EXPECT_EQ(e.line_no(), 9u);
    EXPECT_NE(e.reason().find("non_contiguous_index@2"), std::string::npos);
  }
}

// Random trajectories for the round-trip property.
Json random_json(Rng& rng, int depth) {
  switch (depth > 2 ? rng.index(4) : rng.index(6)) {
    case 0: return Json(rng.uniform_int(-1000, 1000));
    case 1: return Json(rng.uniform(-5, 5));
    case 2: return Json(std::string("s\"\\\n\t") + std::to_string(rng.index(100)));
    case 3: return Json(rng.bernoulli(0.5));
    case 4: {
      Json a = Json::array();
      for (std::size_t i = 0, n = rng.index(4); i < n; ++i) a.push_back(random_json(rng, depth + 1));
      return a;
    }
    default: {
      Json o = Json::object();
      for (std::size_t i = 0, n = rng.index(4); i < n; ++i) {
        o["k" + std::to_string(rng.index(50))] = random_json(rng, depth + 1);
      }
      return o;
    }
  }
}

Trajectory random_trajectory(Rng& rng, std::size_t id) {
  Trajectory t;
  t.run_id = "run-" + std::to_string(id);
  t.task_id = "task é " + std::to_string(rng.index(10));
  t.benchmark = "bench";
  const std::size_t n = 1 + rng.index(8);
  for (std::size_t i = 0; i < n; ++i) {
    Step s;
    if (rng.bernoulli(0.5)) {
      Json args = random_json(rng, 2);
      if (!args.is_object()) args = Json{{"v", args}};
      s = tool_step(static_cast<std::int64_t>(i), "tool" + std::to_string(rng.index(3)), args,
                    rng.bernoulli(0.3));
      if (!s.observation->is_error) s.observation->payload = random_json(rng, 1);
    } else {
      s = message_step(static_cast<std::int64_t>(i), "msg " + std::to_string(rng.index(100)));
      if (rng.bernoulli(0.3)) {
        s.observation = Observation{ObservationKind::kEnvFeedback, random_json(rng, 1), false};
      }
    }
    if (rng.bernoulli(0.4)) s.action.rationale = "because " + std::to_string(i);
    Json state = Json::object();
    state["x"] = random_json(rng, 1);
    s.state = state;
    t.steps.push_back(std::move(s));
  }
  t.outcome.success = rng.bernoulli(0.5);
  if (rng.bernoulli(0.5)) t.outcome.score = std::round(rng.uniform() * 1000) / 1000;
  t.meta = Json{{"seed", rng.index(1000)}};
  return t;
}

TEST(TraceModel, RoundTripProperty) {
  Rng rng(20240611);
  std::vector<Trajectory> corpus;
  for (std::size_t i = 0; i < 200; ++i) corpus.push_back(random_trajectory(rng, i));
  std::stringstream buf;
  write_trace_corpus(buf, corpus);
  const std::string first = buf.str();
  auto parsed = parse_trace_corpus(buf);
  ASSERT_EQ(parsed.size(), corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    EXPECT_EQ(parsed[i], corpus[i]) << "record " << i;
  }
  std::stringstream again;
  write_trace_corpus(again, parsed);
  EXPECT_EQ(again.str(), first);
}

TEST(TraceModel, OutcomeBlindView) {
  Trajectory t = simple_trajectory("r", 1, true);
  auto blind = trajectory_to_json(t, false);
  EXPECT_FALSE(blind.contains("outcome"));
  EXPECT_TRUE(trajectory_to_json(t).contains("outcome"));
}

TEST(TraceModel, SynthTracesValidateClean) {
  auto corpus = synth::generate_corpus(100, testing::uniform_faults(0.5), testing::default_outcome(), 3);
  for (const auto& t : corpus.trajectories) {
    EXPECT_TRUE(validate_trajectory(t).empty()) << t.run_id;
    EXPECT_NO_THROW(parse_trajectory(serialize_trajectory(t), 1, ParseMode::kStrict));
  }
}

}  // namespace
}  // namespace tracexp
