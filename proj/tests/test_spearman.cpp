#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tracexp/errors.hpp"
#include "tracexp/rng.hpp"
#include "tracexp/static_xai/spearman.hpp"

namespace tracexp::xai {
namespace {

// Rank by counting: 1 + #smaller + (#equal - 1) / 2.
std::vector<double> brute_ranks(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double less = 0, equal = 0;
    for (double x : v) {
      less += x < v[i];
      equal += x == v[i];
    }
    r[i] = 1 + less + (equal - 1) / 2;
  }
  return r;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

bool constant(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [&](double x) { return x == v[0]; });
}

TEST(Spearman, ClosedForms) {
  std::vector<double> a = {1, 2, 3, 4};
  std::vector<double> rev = {4, 3, 2, 1};
  std::vector<double> swapped = {2, 1, 4, 3};
  EXPECT_DOUBLE_EQ(spearman_rho(a, a), 1.0);
  EXPECT_DOUBLE_EQ(spearman_rho(a, rev), -1.0);
  EXPECT_NEAR(spearman_rho(a, swapped), 0.6, 1e-12);
}

TEST(Spearman, TiedRanks) {
  std::vector<double> v = {10, 20, 20, 30};
  EXPECT_EQ(average_ranks(v), (std::vector<double>{1, 2.5, 2.5, 4}));
  std::vector<double> same = {5, 5, 5};
  EXPECT_EQ(average_ranks(same), (std::vector<double>{2, 2, 2}));
}

// Every vector over {0,1,2}^n for n <= 5 (ties included) against every other.
TEST(Spearman, BruteForceAllSmallVectors) {
  for (std::size_t n = 2; n <= 5; ++n) {
    std::vector<std::vector<double>> all;
    std::size_t total = 1;
    for (std::size_t i = 0; i < n; ++i) total *= 3;
    for (std::size_t code = 0; code < total; ++code) {
      std::vector<double> v(n);
      std::size_t c = code;
      for (auto& x : v) {
        x = static_cast<double>(c % 3);
        c /= 3;
      }
      all.push_back(v);
    }
    for (const auto& a : all) {
      ASSERT_EQ(average_ranks(a), brute_ranks(a));
      for (const auto& b : all) {
        if (constant(a) || constant(b)) {
          EXPECT_THROW(spearman_rho(a, b), UndefinedCorrelation);
          continue;
        }
        EXPECT_NEAR(spearman_rho(a, b), pearson(brute_ranks(a), brute_ranks(b)), 1e-12);
      }
    }
  }
}

// Without ties rho = 1 - 6 sum d^2 / (n (n^2 - 1)) over all permutations.
TEST(Spearman, PermutationFormula) {
  for (std::size_t n = 2; n <= 5; ++n) {
    std::vector<double> base(n);
    std::iota(base.begin(), base.end(), 1.0);
    std::vector<double> perm = base;
    do {
      double d2 = 0;
      for (std::size_t i = 0; i < n; ++i) d2 += (base[i] - perm[i]) * (base[i] - perm[i]);
      const double nn = static_cast<double>(n);
      EXPECT_NEAR(spearman_rho(base, perm), 1 - 6 * d2 / (nn * (nn * nn - 1)), 1e-12);
    } while (std::next_permutation(perm.begin(), perm.end()));
  }
}

TEST(Spearman, SymmetryAndMonotoneInvariance) {
  Rng rng(6);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 3 + rng.index(30);
    std::vector<double> a(n), b(n);
    for (auto& x : a) x = std::round(rng.uniform(0, 10));
    for (auto& x : b) x = std::round(rng.uniform(0, 10));
    if (constant(a) || constant(b)) continue;
    const double rho = spearman_rho(a, b);
    EXPECT_NEAR(spearman_rho(b, a), rho, 1e-12);
    std::vector<double> ta(n);
    std::transform(a.begin(), a.end(), ta.begin(), [](double x) { return std::exp(x) * 3 - 1; });
    EXPECT_NEAR(spearman_rho(ta, b), rho, 1e-12);
    std::vector<double> neg(n);
    std::transform(a.begin(), a.end(), neg.begin(), [](double x) { return -x; });
    EXPECT_NEAR(spearman_rho(neg, b), -rho, 1e-12);
    EXPECT_LE(std::abs(rho), 1.0);
  }
}

TEST(Spearman, Errors) {
  std::vector<double> a = {1, 2, 3};
  std::vector<double> b = {1, 2};
  EXPECT_THROW(spearman_rho(a, b), LengthMismatch);
  EXPECT_THROW(spearman_rho(std::vector<double>{}, std::vector<double>{}), LengthMismatch);
  EXPECT_THROW(spearman_rho(a, std::vector<double>{2, 2, 2}), UndefinedCorrelation);
}

TEST(Spearman, TopK) {
  std::vector<double> s = {0.5, 2.0, 2.0, -1.0, 3.0};
  EXPECT_EQ(top_k(s, 3), (std::vector<std::size_t>{4, 1, 2}));
  EXPECT_EQ(top_k(s, 2), (std::vector<std::size_t>{4, 1}));
  EXPECT_EQ(top_k(s, 10).size(), 5u);
}

TEST(Spearman, TopKSpearman) {
  Rng rng(10);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> a(12), b(12);
    for (auto& x : a) x = rng.uniform();
    for (auto& x : b) x = rng.uniform();
    // k >= n reduces to plain spearman
    EXPECT_NEAR(topk_spearman(a, b, 12), spearman_rho(a, b), 1e-12);
    EXPECT_DOUBLE_EQ(topk_spearman(a, a, 5), 1.0);
  }
  // Same top-3 in the same order, tail differs: still 1.
  std::vector<double> a = {9, 8, 7, 1, 2, 3};
  std::vector<double> b = {9, 8, 7, 3, 2, 1};
  EXPECT_DOUBLE_EQ(topk_spearman(a, b, 3), 1.0);
  // Disjoint top-2 sets: perfectly anti-ordered on the union.
  std::vector<double> c = {5, 4, 0, 0};
  std::vector<double> d = {0, 0, 5, 4};
  EXPECT_LT(topk_spearman(c, d, 2), 0.0);
}

}  // namespace
}  // namespace tracexp::xai
