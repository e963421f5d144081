#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "bridge_fixture.hpp"
#include "support.hpp"
#include "tracexp/bridge.hpp"
#include "tracexp/errors.hpp"
#include "tracexp/outcome_stats.hpp"
#include "tracexp/static_xai/linear_shap.hpp"

namespace tracexp {
namespace {

std::vector<RubricId> oracle_ranking() {
  auto s = testing::bridge_oracle_scores();
  std::vector<RubricId> out;
  for (auto i : xai::ranking(s)) out.push_back(kCanonicalRubrics[i]);
  return out;
}

TEST(Bridge, OracleScoresByHand) {
  auto s = testing::bridge_oracle_scores();
  const std::array<double, kNumRubrics> printed = {0.251, 1.549, 1.152, 0.801, 0.5, 2.0};
  for (std::size_t r = 0; r < kNumRubrics; ++r) EXPECT_NEAR(s[r], printed[r], 1e-3);
  EXPECT_EQ(oracle_ranking(),
            (std::vector<RubricId>{RubricId::kErrorRecovery, RubricId::kPlanAdherence,
                                   RubricId::kToolCorrectness, RubricId::kToolChoiceAccuracy,
                                   RubricId::kStateTrackingConsistency,
                                   RubricId::kIntentAlignment}));
}

TEST(Bridge, RecoversGeneratorRanking) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    BridgeReport r = run_bridge(testing::bridge_matrix(2000, seed));
    EXPECT_TRUE(r.converged);
    EXPECT_EQ(r.ranking, oracle_ranking()) << "seed " << seed;
    // weight signs follow the generator's success log-odds
    for (std::size_t k = 0; k < kNumRubrics; ++k) {
      EXPECT_EQ(r.weights[k] > 0, testing::kBridgeWeights[k] > 0) << k;
    }
  }
}

TEST(Bridge, FeaturesAreFlagRows) {
  FlagMatrix m = testing::bridge_matrix(50, 9);
  auto v = flags_to_features(m);
  auto s = flags_to_features(m, FeaturePolarity::kSatisfied);
  ASSERT_EQ(v.X.n_rows(), 50u);
  EXPECT_EQ(v.X.n_cols, kNumRubrics);
  EXPECT_EQ(v.run_ids, m.run_ids());
  for (std::size_t i = 0; i < m.size(); ++i) {
    EXPECT_EQ(v.labels[i], m.success[i] ? 1 : 0);
    for (std::size_t r = 0; r < kNumRubrics; ++r) {
      EXPECT_EQ(v.X.rows[i].get(r), m.rows[i].flags[r]);
      EXPECT_EQ(s.X.rows[i].get(r), 1 - m.rows[i].flags[r]);
    }
  }
  EXPECT_THROW(flags_to_features(FlagMatrix{}), EmptyMatrix);
}

TEST(Bridge, PolarityFlipsSignsNotScores) {
  FlagMatrix m = testing::bridge_matrix(800, 4);
  BridgeConfig cfg;
  cfg.train.tol = 1e-8;
  BridgeReport v = run_bridge(m, cfg);
  cfg.polarity = FeaturePolarity::kSatisfied;
  BridgeReport s = run_bridge(m, cfg);
  for (std::size_t r = 0; r < kNumRubrics; ++r) {
    EXPECT_NEAR(v.weights[r], -s.weights[r], 1e-5);
    EXPECT_NEAR(v.mean_abs_shap[r], s.mean_abs_shap[r], 1e-5);
  }
  EXPECT_EQ(v.ranking, s.ranking);
}

TEST(Bridge, RowOrderInvariance) {
  FlagMatrix m = testing::bridge_matrix(600, 5);
  BridgeConfig cfg;
  cfg.train.tol = 1e-8;
  BridgeReport a = run_bridge(m, cfg);
  std::vector<std::size_t> perm(m.size());
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(1);
  rng.shuffle(perm);
  FlagMatrix shuffled;
  for (auto i : perm) {
    shuffled.rows.push_back(m.rows[i]);
    shuffled.success.push_back(m.success[i]);
  }
  BridgeReport b = run_bridge(shuffled, cfg);
  for (std::size_t r = 0; r < kNumRubrics; ++r) {
    EXPECT_NEAR(a.mean_abs_shap[r], b.mean_abs_shap[r], 1e-6);
  }
  EXPECT_EQ(a.ranking, b.ranking);
}

TEST(Bridge, LocalShapSumsToMargin) {
  FlagMatrix m = testing::bridge_matrix(300, 6);
  BridgeReport r = run_bridge(m);
  ASSERT_EQ(r.local_shap.size(), m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    double sum = r.base_value, margin = r.bias;
    for (std::size_t k = 0; k < kNumRubrics; ++k) {
      sum += r.local_shap[i][k];
      margin += r.weights[k] * r.features[i][k];
    }
    EXPECT_NEAR(sum, margin, 1e-9);
  }
}

TEST(Bridge, SingleActiveFeature) {
  FlagMatrix m;
  Rng rng(3);
  for (int i = 0; i < 400; ++i) {
    FlagVector v;
    v.run_id = std::to_string(i);
    v[RubricId::kToolCorrectness] = rng.bernoulli(0.5);
    m.rows.push_back(v);
    m.success.push_back(rng.bernoulli(v[RubricId::kToolCorrectness] ? 0.2 : 0.8));
  }
  BridgeReport r = run_bridge(m);
  EXPECT_EQ(r.ranking.front(), RubricId::kToolCorrectness);
  for (RubricId id : kCanonicalRubrics) {
    if (id == RubricId::kToolCorrectness) continue;
    EXPECT_NEAR(r.mean_abs_shap[rubric_index(id)], 0.0, 1e-9);
  }
  EXPECT_LT(r.weights[rubric_index(RubricId::kToolCorrectness)], 0.0);
}

TEST(Bridge, DegenerateOutcome) {
  FlagMatrix m;
  for (int i = 0; i < 10; ++i) {
    m.rows.push_back(FlagVector{std::to_string(i), {1, 0, 1, 0, 0, 0}});
    m.success.push_back(true);
  }
  EXPECT_THROW(run_bridge(m), DegenerateOutcomeClass);
}

TEST(Bridge, ParadigmSummary) {
  FlagMatrix m = testing::bridge_matrix(500, 7);
  BridgeReport r = run_bridge(m);
  StatsReport s = stats_report(m);
  ParadigmSummary p = paradigm_summary(r, s);
  EXPECT_EQ(p.n_runs, 500);
  ASSERT_EQ(p.rows.size(), kNumRubrics);
  for (std::size_t k = 0; k < kNumRubrics; ++k) {
    EXPECT_EQ(p.rows[k].rubric, kCanonicalRubrics[k]);
    EXPECT_EQ(p.rows[k].mean_abs_shap, r.mean_abs_shap[k]);
    EXPECT_EQ(p.rows[k].delta_prev, s.rows[k].prevalence.delta);
    const auto pos = std::find(r.ranking.begin(), r.ranking.end(), kCanonicalRubrics[k]) - r.ranking.begin();
    EXPECT_EQ(p.rows[k].shap_rank, pos + 1);
  }
  StatsReport other = stats_report(testing::bridge_matrix(500, 8));
  EXPECT_THROW(paradigm_summary(r, other), CorpusMismatch);
}

}  // namespace
}  // namespace tracexp
