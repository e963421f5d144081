#pragma once

#include <span>
#include <vector>

#include "tracexp/static_xai/lime.hpp"
#include "tracexp/static_xai/sparse.hpp"

namespace tracexp::xai {

struct PdpPoint {
  double value = 0.0;
  double mean_prediction = 0.0;
  bool operator==(const PdpPoint&) const = default;
};

// curve(v) = mean over rows of predict_fn(row with feature j set to v).
// Throws DataError on an empty grid, no rows, or j out of range.
std::vector<PdpPoint> pdp(const PredictFn& predict_fn, const SparseMatrix& X, std::size_t j,
                          std::span<const double> grid);

}  // namespace tracexp::xai
