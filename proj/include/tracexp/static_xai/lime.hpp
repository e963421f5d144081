#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "tracexp/static_xai/sparse.hpp"

namespace tracexp::xai {

using PredictFn = std::function<double(const SparseVector&)>;

struct LimeConfig {
  int n_samples = 5000;
  std::size_t k = 10;
  std::uint64_t seed = 42;
  double ridge_alpha = 1.0;
  // Defaults to 0.75 * sqrt(active feature count).
  std::optional<double> kernel_width;
};

struct LimeFeature {
  std::uint32_t feature = 0;
  double weight = 0.0;
};

struct LimeExplanation {
  std::vector<LimeFeature> features;  // descending |weight|, ties by index
  double intercept = 0.0;
  double local_prediction = 0.0;  // surrogate at the unmasked instance
};

// Local surrogate over binary masks of the instance's active (nonzero)
// features. Sample 0 is the unmasked instance; every other sample removes
// between 1 and d features chosen uniformly. Samples are weighted by
// sqrt(exp(-dist^2 / width^2)) where dist = sqrt(#removed), then a weighted
// ridge regression with intercept is fit in mask space.
// Throws DegenerateInstance when the instance has no active features.
LimeExplanation lime_explain(const PredictFn& predict_fn, const SparseVector& instance,
                             const LimeConfig& config = {});

}  // namespace tracexp::xai
