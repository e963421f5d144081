#include <gtest/gtest.h>

#include <cmath>

#include "tracexp/errors.hpp"
#include "tracexp/rng.hpp"
#include "tracexp/static_xai/lime.hpp"
#include "tracexp/static_xai/logreg.hpp"

namespace tracexp::xai {
namespace {

struct Case {
  LinearModel model;
  SparseVector x;
};

Case random_case(Rng& rng, std::size_t dim, std::size_t active) {
  Case c;
  c.model.bias = rng.uniform(-1, 1);
  for (std::size_t j = 0; j < dim; ++j) {
    double w = rng.uniform(0.2, 3.0);
    c.model.weights.push_back(rng.bernoulli(0.5) ? w : -w);
    c.model.background_means.push_back(0.0);
  }
  std::vector<std::pair<std::uint32_t, double>> pairs;
  std::vector<std::uint32_t> idx(dim);
  for (std::size_t j = 0; j < dim; ++j) idx[j] = static_cast<std::uint32_t>(j);
  rng.shuffle(idx);
  for (std::size_t k = 0; k < active; ++k) pairs.push_back({idx[k], rng.uniform(0.2, 1.0)});
  c.x = SparseVector::from_pairs(dim, pairs);
  return c;
}

TEST(Lime, SignsMatchLinearOracle) {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    Case c = random_case(rng, 60, 5 + rng.index(20));
    PredictFn f = [&](const SparseVector& v) { return margin(c.model, v); };
    LimeConfig cfg;
    cfg.n_samples = 2000;
    cfg.seed = static_cast<std::uint64_t>(trial);
    LimeExplanation e = lime_explain(f, c.x, cfg);
    ASSERT_EQ(e.features.size(), std::min<std::size_t>(cfg.k, c.x.nnz()));
    for (const auto& feat : e.features) {
      EXPECT_GT(c.model.weights[feat.feature] * feat.weight, 0.0) << feat.feature;
    }
  }
}

TEST(Lime, RecoversMaskCoefficients) {
  // Removing feature i changes a linear margin by w_i * x_i, so the surrogate
  // weight in mask space is that product (up to ridge shrinkage).
  Rng rng(2);
  Case c = random_case(rng, 30, 8);
  PredictFn f = [&](const SparseVector& v) { return margin(c.model, v); };
  LimeConfig cfg;
  cfg.k = 8;
  LimeExplanation e = lime_explain(f, c.x, cfg);
  for (const auto& feat : e.features) {
    const double expected = c.model.weights[feat.feature] * c.x.get(feat.feature);
    EXPECT_NEAR(feat.weight, expected, 0.05 * std::abs(expected) + 1e-3);
  }
  EXPECT_NEAR(e.local_prediction, margin(c.model, c.x), 0.05);
}

TEST(Lime, OrderedByMagnitudeAndClipped) {
  Rng rng(8);
  Case c = random_case(rng, 40, 4);
  PredictFn f = [&](const SparseVector& v) { return predict_proba(c.model, v); };
  LimeExplanation e = lime_explain(f, c.x);
  ASSERT_EQ(e.features.size(), 4u);
  for (std::size_t i = 1; i < e.features.size(); ++i) {
    EXPECT_GE(std::abs(e.features[i - 1].weight), std::abs(e.features[i].weight));
  }
  for (const auto& feat : e.features) EXPECT_NE(c.x.get(feat.feature), 0.0);
}

TEST(Lime, DeterministicPerSeed) {
  Rng rng(4);
  Case c = random_case(rng, 50, 15);
  PredictFn f = [&](const SparseVector& v) { return predict_proba(c.model, v); };
  LimeExplanation a = lime_explain(f, c.x);
  LimeExplanation b = lime_explain(f, c.x);
  ASSERT_EQ(a.features.size(), b.features.size());
  for (std::size_t i = 0; i < a.features.size(); ++i) {
    EXPECT_EQ(a.features[i].feature, b.features[i].feature);
    EXPECT_EQ(a.features[i].weight, b.features[i].weight);
  }
  LimeConfig other;
  other.seed = 43;
  LimeExplanation d = lime_explain(f, c.x, other);
  EXPECT_NE(a.features[0].weight, d.features[0].weight);
}

TEST(Lime, SingleActiveFeature) {
  LinearModel m{{0.0, 2.0, 0.0}, 0.0, {0, 0, 0}};
  SparseVector x = SparseVector::from_pairs(3, {{1, 1.0}});
  PredictFn f = [&](const SparseVector& v) { return margin(m, v); };
  LimeExplanation e = lime_explain(f, x);
  ASSERT_EQ(e.features.size(), 1u);
  EXPECT_EQ(e.features[0].feature, 1u);
  EXPECT_GT(e.features[0].weight, 0.0);
}

TEST(Lime, DegenerateInstance) {
  SparseVector empty;
  empty.dim = 5;
  PredictFn f = [](const SparseVector&) { return 0.5; };
  EXPECT_THROW(lime_explain(f, empty), DegenerateInstance);
}

}  // namespace
}  // namespace tracexp::xai
