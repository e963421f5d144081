#include "tracexp/static_xai/sparse.hpp"

#include <algorithm>

#include "tracexp/errors.hpp"

namespace tracexp::xai {

double SparseVector::get(std::size_t i) const {
  auto it = std::lower_bound(indices.begin(), indices.end(), static_cast<std::uint32_t>(i));
  if (it == indices.end() || *it != i) return 0.0;
  return values[static_cast<std::size_t>(it - indices.begin())];
}

SparseVector SparseVector::with(std::size_t i, double v) const {
  if (i >= dim) throw DimensionMismatch(dim, i + 1);
  SparseVector out = *this;
  auto it = std::lower_bound(out.indices.begin(), out.indices.end(), static_cast<std::uint32_t>(i));
  const auto pos = it - out.indices.begin();
  const bool present = it != out.indices.end() && *it == i;
  if (present) {
    if (v == 0.0) {
      out.indices.erase(it);
      out.values.erase(out.values.begin() + pos);
    } else {
      out.values[static_cast<std::size_t>(pos)] = v;
    }
  } else if (v != 0.0) {
    out.indices.insert(it, static_cast<std::uint32_t>(i));
    out.values.insert(out.values.begin() + pos, v);
  }
  return out;
}

double SparseVector::dot(std::span<const double> dense) const {
  if (dense.size() != dim) throw DimensionMismatch(dim, dense.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < indices.size(); ++k) acc += values[k] * dense[indices[k]];
  return acc;
}

std::vector<double> SparseVector::to_dense() const {
  std::vector<double> out(dim, 0.0);
  for (std::size_t k = 0; k < indices.size(); ++k) out[indices[k]] = values[k];
  return out;
}

SparseVector SparseVector::from_dense(std::span<const double> dense) {
  SparseVector out;
  out.dim = dense.size();
  for (std::size_t i = 0; i < dense.size(); ++i) {
    if (dense[i] != 0.0) {
      out.indices.push_back(static_cast<std::uint32_t>(i));
      out.values.push_back(dense[i]);
    }
  }
  return out;
}

SparseVector SparseVector::from_pairs(std::size_t dim,
                                      std::vector<std::pair<std::uint32_t, double>> pairs) {
  std::sort(pairs.begin(), pairs.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });
  SparseVector out;
  out.dim = dim;
  for (const auto& [i, v] : pairs) {
    if (i >= dim) throw DimensionMismatch(dim, i + 1);
    if (!out.indices.empty() && out.indices.back() == i) {
      out.values.back() += v;
    } else {
      out.indices.push_back(i);
      out.values.push_back(v);
    }
  }
  SparseVector pruned;
  pruned.dim = dim;
  for (std::size_t k = 0; k < out.indices.size(); ++k) {
    if (out.values[k] != 0.0) {
      pruned.indices.push_back(out.indices[k]);
      pruned.values.push_back(out.values[k]);
    }
  }
  return pruned;
}

std::vector<double> SparseMatrix::column_means() const {
  std::vector<double> means(n_cols, 0.0);
  if (rows.empty()) return means;
  for (const auto& row : rows) {
    for (std::size_t k = 0; k < row.indices.size(); ++k) means[row.indices[k]] += row.values[k];
  }
  for (double& m : means) m /= static_cast<double>(rows.size());
  return means;
}

SparseMatrix SparseMatrix::from_dense(const std::vector<std::vector<double>>& dense) {
  SparseMatrix out;
  out.n_cols = dense.empty() ? 0 : dense.front().size();
  for (const auto& row : dense) {
    if (row.size() != out.n_cols) throw DimensionMismatch(out.n_cols, row.size());
    out.rows.push_back(SparseVector::from_dense(row));
  }
  return out;
}

}  // namespace tracexp::xai
