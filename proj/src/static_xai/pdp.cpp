#include "tracexp/static_xai/pdp.hpp"

#include "tracexp/errors.hpp"

namespace tracexp::xai {

std::vector<PdpPoint> pdp(const PredictFn& predict_fn, const SparseMatrix& X, std::size_t j,
                          std::span<const double> grid) {
  if (grid.empty()) throw DataError("PDP grid is empty");
  if (X.rows.empty()) throw DataError("PDP needs at least one row");
  if (j >= X.n_cols) throw DimensionMismatch(X.n_cols, j + 1);
  std::vector<PdpPoint> curve;
  curve.reserve(grid.size());
  for (double v : grid) {
    double acc = 0.0;
    for (const auto& row : X.rows) acc += predict_fn(row.with(j, v));
    curve.push_back({v, acc / static_cast<double>(X.rows.size())});
  }
  return curve;
}

}  // namespace tracexp::xai
