#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace tracexp::xai {

// Sparse feature vector with strictly increasing indices.
struct SparseVector {
  std::size_t dim = 0;
  std::vector<std::uint32_t> indices;
  std::vector<double> values;

  std::size_t nnz() const { return indices.size(); }

  double get(std::size_t i) const;

  // Returns a copy with coordinate i set to v (v == 0 removes it).
  SparseVector with(std::size_t i, double v) const;

  double dot(std::span<const double> dense) const;

  std::vector<double> to_dense() const;

  static SparseVector from_dense(std::span<const double> dense);

  // Builds from (index, value) pairs in any order; duplicates are summed and
  // zeros dropped.
  static SparseVector from_pairs(std::size_t dim,
                                 std::vector<std::pair<std::uint32_t, double>> pairs);

  bool operator==(const SparseVector&) const = default;
};

// Row-major sparse design matrix.
struct SparseMatrix {
  std::size_t n_cols = 0;
  std::vector<SparseVector> rows;

  std::size_t n_rows() const { return rows.size(); }
  std::vector<double> column_means() const;

  static SparseMatrix from_dense(const std::vector<std::vector<double>>& dense);
};

}  // namespace tracexp::xai
