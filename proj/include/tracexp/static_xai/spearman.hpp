#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace tracexp::xai {

// 1-based ranks, ascending by value; tied values share their mean rank.
std::vector<double> average_ranks(std::span<const double> values);

// Pearson correlation of average ranks. Throws LengthMismatch on differing or
// zero length and UndefinedCorrelation when either ranking is constant.
double spearman_rho(std::span<const double> a, std::span<const double> b);

// Indices of the k largest scores; ties prefer the lower index.
std::vector<std::size_t> top_k(std::span<const double> scores, std::size_t k);

// Spearman over the union of both top-k sets. Within each vector, members of
// its own top-k keep their score order and every other union member shares
// the last (averaged) rank. Same errors as spearman_rho.
double topk_spearman(std::span<const double> a, std::span<const double> b, std::size_t k);

}  // namespace tracexp::xai
