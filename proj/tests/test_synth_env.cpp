#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "support.hpp"
#include "tracexp/errors.hpp"
#include "tracexp/synth_env.hpp"

namespace tracexp::synth {
namespace {

using testing::default_outcome;
using testing::uniform_faults;

std::string dump(const std::vector<Trajectory>& ts) {
  std::ostringstream out;
  write_trace_corpus(out, ts);
  return out.str();
}

TEST(SynthEnv, SuccessRateMatchesOutcomeModel) {
  OutcomeModel m;
  m.bias = std::log(0.9 / 0.1);
  const std::size_t n = 4000;
  auto c = generate_corpus(n, uniform_faults(0.3), m, 11);
  std::size_t wins = 0;
  for (const auto& t : c.trajectories) wins += t.outcome.success ? 1 : 0;
  const double sd = std::sqrt(n * 0.9 * 0.1);
  EXPECT_NEAR(static_cast<double>(wins), 0.9 * n, 4 * sd);
}

TEST(SynthEnv, FaultRatesMatchSpec) {
  FaultSpec f;
  f.probability = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  const std::size_t n = 4000;
  auto c = generate_corpus(n, f, default_outcome(), 5);
  for (std::size_t r = 0; r < kNumRubrics; ++r) {
    std::size_t hits = 0;
    for (const auto& run : c.truth.runs) hits += run.flags[r];
    const double p = f.probability[r];
    EXPECT_NEAR(static_cast<double>(hits), p * n, 4 * std::sqrt(n * p * (1 - p))) << r;
  }
}

TEST(SynthEnv, ConditionalSuccessFollowsWeights) {
  // Only one rubric fires; success given flag vs no flag follows the model.
  FaultSpec f;
  f[RubricId::kStateTrackingConsistency] = 0.5;
  OutcomeModel m;
  m.bias = 1.0;
  m.weights[rubric_index(RubricId::kStateTrackingConsistency)] = -2.0;
  const std::size_t n = 6000;
  auto c = generate_corpus(n, f, m, 9);
  double s1 = 0, n1 = 0, s0 = 0, n0 = 0;
  for (const auto& run : c.truth.runs) {
    if (run.flags[rubric_index(RubricId::kStateTrackingConsistency)]) {
      ++n1;
      s1 += run.success;
    } else {
      ++n0;
      s0 += run.success;
    }
  }
  const double p1 = 1 / (1 + std::exp(1.0));   // sigmoid(-1)
  const double p0 = 1 / (1 + std::exp(-1.0));  // sigmoid(1)
  EXPECT_NEAR(s1 / n1, p1, 4 * std::sqrt(p1 * (1 - p1) / n1));
  EXPECT_NEAR(s0 / n0, p0, 4 * std::sqrt(p0 * (1 - p0) / n0));
}

TEST(SynthEnv, CertainFaultAlwaysPresent) {
  FaultSpec f;
  f[RubricId::kStateTrackingConsistency] = 1.0;
  auto c = generate_corpus(300, f, default_outcome(), 2);
  for (const auto& run : c.truth.runs) {
    EXPECT_EQ(run.flags[rubric_index(RubricId::kStateTrackingConsistency)], 1);
    for (RubricId id : kCanonicalRubrics) {
      if (id != RubricId::kStateTrackingConsistency) EXPECT_EQ(run.flags[rubric_index(id)], 0);
    }
  }
}

TEST(SynthEnv, ZeroFaultsGiveCleanTruth) {
  auto c = generate_corpus(200, uniform_faults(0.0), default_outcome(), 4);
  for (const auto& run : c.truth.runs) {
    for (auto f : run.flags) EXPECT_EQ(f, 0);
  }
}

TEST(SynthEnv, Deterministic) {
  auto a = generate_corpus(300, uniform_faults(0.3, 17), default_outcome(), 7);
  auto b = generate_corpus(300, uniform_faults(0.3, 17), default_outcome(), 7);
  EXPECT_EQ(dump(a.trajectories), dump(b.trajectories));
  EXPECT_EQ(a.truth, b.truth);
}

TEST(SynthEnv, ThreadedGenerationMatchesSerial) {
  // Above the parallel threshold the corpus must equal per-run generation.
  auto c = generate_corpus(1200, uniform_faults(0.3), default_outcome(), 8);
  for (std::size_t k : {0u, 1u, 599u, 1199u}) {
    auto [t, truth] = generate_run(8, uniform_faults(0.3), default_outcome(), k);
    EXPECT_EQ(serialize_trajectory(t), serialize_trajectory(c.trajectories[k]));
    EXPECT_EQ(truth, c.truth.runs[k]);
  }
}

TEST(SynthEnv, SeedsChangeOutput) {
  auto a = generate_corpus(50, uniform_faults(0.3), default_outcome(), 1);
  auto b = generate_corpus(50, uniform_faults(0.3), default_outcome(), 2);
  auto c = generate_corpus(50, uniform_faults(0.3, 99), default_outcome(), 1);
  EXPECT_NE(dump(a.trajectories), dump(b.trajectories));
  EXPECT_NE(dump(a.trajectories), dump(c.trajectories));
}

TEST(SynthEnv, ReplayMatchesCorpus) {
  const FaultSpec f = uniform_faults(0.4, 3);
  const auto m = default_outcome();
  auto c = generate_corpus(100, f, m, 21);
  for (std::size_t k = 0; k < 100; k += 7) {
    ReplayConfig cfg{21, f, m, 100, k};
    EXPECT_EQ(replay(cfg), c.trajectories[k]);
  }
  EXPECT_THROW(replay(ReplayConfig{21, f, m, 100, 100}), OrdinalOutOfRange);
}

TEST(SynthEnv, RunIdsAndMeta) {
  auto c = generate_corpus(3, uniform_faults(0.2), default_outcome(), 42);
  EXPECT_EQ(c.trajectories[2].run_id, "synth-42-000002");
  EXPECT_EQ(c.truth.run_ids[2], "synth-42-000002");
  EXPECT_EQ(c.trajectories[2].meta["replay"]["ordinal"], 2);
  EXPECT_EQ(c.trajectories[2].benchmark, "synthetic-airline");
  for (const auto& t : c.trajectories) {
    EXPECT_GE(t.steps.size(), kMinSteps);
    EXPECT_LE(t.steps.size(), kMaxSteps);
  }
  EXPECT_EQ(&c.truth.at("synth-42-000001"), &c.truth.runs[1]);
  EXPECT_THROW(c.truth.at("nope"), DataError);
}

TEST(SynthEnv, RejectsBadSpecs) {
  FaultSpec f = uniform_faults(0.2);
  f.probability[3] = 1.5;
  EXPECT_THROW(generate_corpus(10, f, default_outcome(), 1), InvalidFaultSpec);
  f.probability[3] = std::nan("");
  EXPECT_THROW(generate_corpus(10, f, default_outcome(), 1), InvalidFaultSpec);
  OutcomeModel m = default_outcome();
  m.bias = INFINITY;
  EXPECT_THROW(generate_corpus(10, uniform_faults(0.2), m, 1), InvalidFaultSpec);
  EXPECT_THROW(generate_corpus(0, uniform_faults(0.2), default_outcome(), 1), InvalidFaultSpec);
}

TEST(SynthEnv, ConfigParsing) {
  SynthConfig base;
  base.faults.probability.fill(0.25);
  auto cfg = parse_synth_config(R"(
seed = 7
runs = 50
[faults]
error_recovery = 0.6
seed = 3
[outcome]
bias = 2.0
[outcome.weights]
plan_adherence = -1.5
)", base);
  EXPECT_EQ(cfg.seed, 7u);
  EXPECT_EQ(cfg.n_runs, 50u);
  EXPECT_EQ(cfg.faults.seed, 3u);
  EXPECT_DOUBLE_EQ(cfg.faults[RubricId::kErrorRecovery], 0.6);
  EXPECT_DOUBLE_EQ(cfg.faults[RubricId::kIntentAlignment], 0.25);
  EXPECT_DOUBLE_EQ(cfg.outcome.bias, 2.0);
  EXPECT_DOUBLE_EQ(cfg.outcome.weights[rubric_index(RubricId::kPlanAdherence)], -1.5);
  EXPECT_THROW(parse_synth_config("[faults]\nbogus = 0.1\n"), DataError);
  EXPECT_THROW(parse_synth_config("[faults]\nerror_recovery = \"x\"\n"), DataError);
  EXPECT_THROW(parse_synth_config("seed = \n"), DataError);
}

TEST(SynthEnv, GroundTruthRoundTrip) {
  auto c = generate_corpus(40, uniform_faults(0.5), default_outcome(), 6);
  std::stringstream buf;
  write_ground_truth(buf, c.truth);
  EXPECT_EQ(read_ground_truth(buf), c.truth);
}

}  // namespace
}  // namespace tracexp::synth
