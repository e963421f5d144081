#include <gtest/gtest.h>

#include <cmath>

#include "tracexp/errors.hpp"
#include "tracexp/rng.hpp"
#include "tracexp/static_xai/linear_shap.hpp"

namespace tracexp::xai {
namespace {

TEST(LinearShap, WorkedExample) {
  LinearModel m{{2.0, -1.0}, 0.3, {0.5, 0.5}};
  Attribution a = shap_linear(m, std::vector<double>{1.0, 1.0});
  EXPECT_DOUBLE_EQ(a.scores[0], 1.0);
  EXPECT_DOUBLE_EQ(a.scores[1], -0.5);
  EXPECT_DOUBLE_EQ(a.base_value, 0.5 * 2 - 0.5 + 0.3);
  EXPECT_EQ(a.scope, Scope::kLocal);
  EXPECT_EQ(to_string(Scope::kGlobal), "global");
}

TEST(LinearShap, LocalAccuracyProperty) {
  Rng rng(101);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t d = 1 + rng.index(40);
    LinearModel m;
    m.bias = rng.uniform(-3, 3);
    for (std::size_t j = 0; j < d; ++j) {
      m.weights.push_back(rng.uniform(-5, 5));
      m.background_means.push_back(rng.uniform(0, 1));
    }
    std::vector<double> x(d);
    for (auto& v : x) v = rng.bernoulli(0.3) ? rng.uniform(-2, 2) : 0.0;
    Attribution dense = shap_linear(m, x);
    Attribution sparse = shap_linear(m, SparseVector::from_dense(x));
    double sum = 0;
    for (double s : dense.scores) sum += s;
    EXPECT_NEAR(sum + dense.base_value, margin(m, x), 1e-9);
    for (std::size_t j = 0; j < d; ++j) EXPECT_NEAR(dense.scores[j], sparse.scores[j], 1e-12);
  }
}

TEST(LinearShap, MeanAbsMatchesBernoulliClosedForm) {
  // Rates near 1/2 keep sampling noise in p(1-p) well under the 2% band.
  const std::vector<double> p = {0.35, 0.45, 0.5, 0.65};
  const std::vector<double> w = {3.0, -1.5, 0.8, -2.2};
  Rng rng(5);
  std::vector<std::vector<double>> dense(10000, std::vector<double>(p.size()));
  for (auto& row : dense) {
    for (std::size_t j = 0; j < p.size(); ++j) row[j] = rng.bernoulli(p[j]) ? 1.0 : 0.0;
  }
  SparseMatrix X = SparseMatrix::from_dense(dense);
  LinearModel m{w, -0.4, X.column_means()};
  Attribution g = mean_abs_shap(m, X);
  EXPECT_EQ(g.scope, Scope::kGlobal);
  for (std::size_t j = 0; j < p.size(); ++j) {
    const double oracle = 2 * std::abs(w[j]) * p[j] * (1 - p[j]);
    EXPECT_NEAR(g.scores[j], oracle, 0.02 * oracle) << j;
    // Exact in the empirical rate.
    const double ph = m.background_means[j];
    EXPECT_NEAR(g.scores[j], 2 * std::abs(w[j]) * ph * (1 - ph), 1e-12) << j;
  }
}

TEST(LinearShap, MeanAbsEqualsDenseAverage) {
  Rng rng(9);
  std::vector<std::vector<double>> dense(200, std::vector<double>(8));
  for (auto& row : dense) {
    for (auto& v : row) v = rng.bernoulli(0.2) ? rng.uniform(0.1, 1) : 0.0;
  }
  SparseMatrix X = SparseMatrix::from_dense(dense);
  LinearModel m{{1, -2, 0.5, 0, 3, -1, 0.25, 2}, 0.1, X.column_means()};
  Attribution g = mean_abs_shap(m, X);
  for (std::size_t j = 0; j < 8; ++j) {
    double s = 0;
    for (const auto& row : dense) s += std::abs(m.weights[j] * (row[j] - m.background_means[j]));
    EXPECT_NEAR(g.scores[j], s / 200, 1e-12);
  }
}

TEST(LinearShap, RankingInvariances) {
  Rng rng(12);
  std::vector<std::vector<double>> dense(500, std::vector<double>(6));
  for (auto& row : dense) {
    for (auto& v : row) v = rng.bernoulli(0.35) ? 1.0 : 0.0;
  }
  SparseMatrix X = SparseMatrix::from_dense(dense);
  LinearModel m{{0.4, -2.0, 1.1, 0.05, -0.7, 3.0}, 0.2, X.column_means()};
  auto base = ranking(mean_abs_shap(m, X).scores);
  for (double scale : {0.01, 3.0, 250.0}) {
    LinearModel s = m;
    for (auto& w : s.weights) w *= scale;
    s.bias = -7;
    EXPECT_EQ(ranking(mean_abs_shap(s, X).scores), base);
  }
  LinearModel flipped = m;
  for (auto& w : flipped.weights) w = -w;
  EXPECT_EQ(ranking(mean_abs_shap(flipped, X).scores), base);
}

TEST(LinearShap, RankingTiesByIndex) {
  std::vector<double> s = {1.0, 3.0, 1.0, 3.0, 0.5};
  EXPECT_EQ(ranking(s), (std::vector<std::size_t>{1, 3, 0, 2, 4}));
}

TEST(LinearShap, Errors) {
  LinearModel m{{1.0}, 0.0, {0.0}};
  EXPECT_THROW(shap_linear(m, std::vector<double>{1, 2}), DimensionMismatch);
  SparseMatrix empty;
  empty.n_cols = 1;
  EXPECT_THROW(mean_abs_shap(m, empty), DataError);
}

}  // namespace
}  // namespace tracexp::xai
