#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "support.hpp"
#include "tracexp/errors.hpp"
#include "tracexp/static_xai/linear_shap.hpp"
#include "tracexp/static_xai/stability.hpp"
#include "tracexp/static_xai/tfidf.hpp"

namespace tracexp::xai {
namespace {

struct Fitted {
  TfIdfModel tfidf;
  LinearModel model;
  std::vector<std::string> texts;
  SparseMatrix X;
  std::vector<int> y;
};

Fitted fit_separable(std::size_t n, std::uint64_t seed) {
  auto corpus = testing::separable_corpus(n, seed);
  Fitted f;
  TfIdfConfig tc;
  tc.min_df = 2;
  f.tfidf = fit_tfidf(corpus.texts, tc);
  f.X = transform_all(f.tfidf, corpus.texts);
  f.y = corpus.labels;
  f.model = train_logreg(f.X, f.y).model;
  f.texts = corpus.texts;
  return f;
}

auto abs_shap_explainer(const Fitted& f) {
  return [&f](const std::string& text) {
    auto s = shap_linear(f.model, transform(f.tfidf, text)).scores;
    for (double& v : s) v = std::abs(v);
    return s;
  };
}

TEST(Stability, IdentityIsExactlyOne) {
  Fitted f = fit_separable(200, 1);
  std::vector<std::string> inst(f.texts.begin(), f.texts.begin() + 30);
  StabilityConfig cfg;
  cfg.perturbation = Perturbation::kIdentity;
  auto r = stability_identity<std::string>(abs_shap_explainer(f), std::span<const std::string>(inst), cfg);
  EXPECT_EQ(r.mean_rho, 1.0);
  EXPECT_EQ(r.pairs_evaluated, 30u * 20u);
  EXPECT_EQ(r.pairs_skipped, 0u);
}

// The union-of-top-k scheme gives absent features a shared bottom rank, which
// biases random rankings negative when k < n; with k = n it is plain Spearman.
TEST(Stability, RandomExplainerIsUncorrelated) {
  Rng scores(99);
  auto random_explain = [&](const int&) {
    std::vector<double> s(10);
    for (auto& v : s) v = scores.uniform();
    return s;
  };
  std::vector<int> inst(10);
  StabilityConfig cfg;
  cfg.k = 10;
  cfg.n_perturb = 20;
  auto r = stability_identity<int>(random_explain, std::span<const int>(inst), cfg);
  EXPECT_EQ(r.pairs_evaluated, 200u);
  EXPECT_LE(std::abs(r.mean_rho), 0.1);
}

TEST(Stability, LogisticRegressionUnderDropout) {
  Fitted f = fit_separable(400, 2);
  std::vector<std::string> inst(f.texts.begin(), f.texts.begin() + 50);
  StabilityConfig cfg;
  auto r = stability_score<std::string>(
      abs_shap_explainer(f), std::span<const std::string>(inst), cfg,
      [](const std::string& t, Rng& rng) { return token_dropout(t, 0.1, rng); });
  EXPECT_EQ(r.pairs_evaluated + r.pairs_skipped, 1000u);
  EXPECT_GE(r.mean_rho, 0.8);
}

TEST(Stability, ThreadCountDoesNotChangeResult) {
  Fitted f = fit_separable(200, 3);
  std::vector<std::string> inst(f.texts.begin(), f.texts.begin() + 25);
  auto run = [&](unsigned threads) {
    StabilityConfig cfg;
    cfg.threads = threads;
    return stability_score<std::string>(
        abs_shap_explainer(f), std::span<const std::string>(inst), cfg,
        [](const std::string& t, Rng& rng) { return token_dropout(t, 0.2, rng); });
  };
  auto a = run(1);
  auto b = run(4);
  EXPECT_EQ(a.mean_rho, b.mean_rho);
  ASSERT_EQ(a.rhos.size(), b.rhos.size());
  for (std::size_t i = 0; i < a.rhos.size(); ++i) {
    if (std::isnan(a.rhos[i])) {
      EXPECT_TRUE(std::isnan(b.rhos[i]));
    } else {
      EXPECT_EQ(a.rhos[i], b.rhos[i]);
    }
  }
}

TEST(Stability, BootstrapRetrain) {
  Fitted f = fit_separable(200, 4);
  SparseMatrix inst;
  inst.n_cols = f.X.n_cols;
  inst.rows.assign(f.X.rows.begin(), f.X.rows.begin() + 10);
  StabilityConfig cfg;
  cfg.perturbation = Perturbation::kBootstrapRetrain;
  cfg.n_perturb = 5;
  auto r = stability_bootstrap(f.X, f.y, inst, cfg);
  EXPECT_EQ(r.pairs_evaluated + r.pairs_skipped, 50u);
  EXPECT_GT(r.mean_rho, 0.5);
  EXPECT_LE(r.mean_rho, 1.0);
}

TEST(Stability, TokenDropoutText) {
  Rng rng(1);
  EXPECT_EQ(token_dropout("a b c", 0.0, rng), "a b c");
  EXPECT_EQ(token_dropout("a b c", 1.0, rng), "");
  std::size_t kept = 0, total = 0;
  for (int i = 0; i < 2000; ++i) {
    std::istringstream in(token_dropout("w w w w w w w w w w", 0.1, rng));
    std::string w;
    while (in >> w) ++kept;
    total += 10;
  }
  EXPECT_NEAR(static_cast<double>(kept) / total, 0.9, 0.01);
}

TEST(Stability, TokenDropoutSparse) {
  Rng rng(2);
  SparseVector x = SparseVector::from_pairs(6, {{0, 1.0}, {3, 2.0}, {5, 0.5}});
  SparseVector y = token_dropout(x, 0.5, rng);
  EXPECT_EQ(y.dim, 6u);
  for (std::size_t k = 0; k < y.nnz(); ++k) EXPECT_EQ(y.values[k], x.get(y.indices[k]));
}

TEST(Stability, ConfigValidation) {
  StabilityConfig cfg;
  cfg.rate = 1.5;
  EXPECT_THROW(cfg.validate(), DataError);
  cfg = {};
  cfg.k = 0;
  EXPECT_THROW(cfg.validate(), DataError);
  cfg = {};
  cfg.n_perturb = 0;
  EXPECT_THROW(cfg.validate(), DataError);
  EXPECT_EQ(parse_perturbation("bootstrap_retrain"), Perturbation::kBootstrapRetrain);
  EXPECT_EQ(to_string(Perturbation::kTokenDropout), "token_dropout");
  EXPECT_THROW(parse_perturbation("shake"), DataError);
}

TEST(Stability, AllPairsUndefinedThrows) {
  auto constant = [](const int&) { return std::vector<double>(5, 1.0); };
  std::vector<int> inst(3);
  StabilityConfig cfg;
  cfg.k = 5;
  EXPECT_THROW(stability_identity<int>(constant, std::span<const int>(inst), cfg),
               UndefinedCorrelation);
  cfg.k = 6;
  EXPECT_THROW(stability_identity<int>(constant, std::span<const int>(inst), cfg), DataError);
}

}  // namespace
}  // namespace tracexp::xai
