#include "tracexp/static_xai/spearman.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "tracexp/errors.hpp"

namespace tracexp::xai {

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = r;
    i = j + 1;
  }
  return ranks;
}

double spearman_rho(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) throw LengthMismatch(fmt::format("score vectors have lengths {} and {}", a.size(), b.size()));
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) throw UndefinedCorrelation("ranking is constant");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

std::vector<std::size_t> top_k(std::span<const double> scores, std::size_t k) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  k = std::min(k, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [&](std::size_t x, std::size_t y) {
                      return scores[x] > scores[y] || (scores[x] == scores[y] && x < y);
                    });
  order.resize(k);
  return order;
}

double topk_spearman(std::span<const double> a, std::span<const double> b, std::size_t k) {
  if (a.size() != b.size() || a.empty()) throw LengthMismatch(fmt::format("score vectors have lengths {} and {}", a.size(), b.size()));
  const auto ta = top_k(a, k);
  const auto tb = top_k(b, k);
  std::vector<std::size_t> uni(ta);
  uni.insert(uni.end(), tb.begin(), tb.end());
  std::sort(uni.begin(), uni.end());
  uni.erase(std::unique(uni.begin(), uni.end()), uni.end());

  constexpr double kAbsent = -std::numeric_limits<double>::infinity();
  auto restrict = [&](std::span<const double> s, const std::vector<std::size_t>& top) {
    std::vector<double> out;
    out.reserve(uni.size());
    for (std::size_t i : uni) {
      const bool in = std::find(top.begin(), top.end(), i) != top.end();
      out.push_back(in ? s[i] : kAbsent);
    }
    return out;
  };
  const auto ra = restrict(a, ta);
  const auto rb = restrict(b, tb);
  return spearman_rho(ra, rb);
}

}  // namespace tracexp::xai
