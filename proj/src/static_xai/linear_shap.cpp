#include "tracexp/static_xai/linear_shap.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tracexp/errors.hpp"

namespace tracexp::xai {

std::string_view to_string(Scope s) { return s == Scope::kLocal ? "local" : "global"; }

namespace {

double base_value(const LinearModel& m) {
  return std::inner_product(m.weights.begin(), m.weights.end(), m.background_means.begin(), 0.0) +
         m.bias;
}

void check_model(const LinearModel& m) {
  if (m.background_means.size() != m.weights.size()) {
    throw DimensionMismatch(m.weights.size(), m.background_means.size());
  }
}

}  // namespace

Attribution shap_linear(const LinearModel& m, const SparseVector& x) {
  check_model(m);
  if (x.dim != m.dim()) throw DimensionMismatch(m.dim(), x.dim);
  Attribution out;
  out.scope = Scope::kLocal;
  out.base_value = base_value(m);
  out.scores.resize(m.dim());
  for (std::size_t i = 0; i < m.dim(); ++i) out.scores[i] = -m.weights[i] * m.background_means[i];
  for (std::size_t k = 0; k < x.nnz(); ++k) {
    const auto i = x.indices[k];
    out.scores[i] = m.weights[i] * (x.values[k] - m.background_means[i]);
  }
  return out;
}

Attribution shap_linear(const LinearModel& m, std::span<const double> x) {
  check_model(m);
  if (x.size() != m.dim()) throw DimensionMismatch(m.dim(), x.size());
  Attribution out;
  out.scope = Scope::kLocal;
  out.base_value = base_value(m);
  out.scores.resize(m.dim());
  for (std::size_t i = 0; i < m.dim(); ++i) {
    out.scores[i] = m.weights[i] * (x[i] - m.background_means[i]);
  }
  return out;
}

Attribution mean_abs_shap(const LinearModel& m, const SparseMatrix& X) {
  check_model(m);
  if (X.rows.empty()) throw DataError("design matrix has no rows");
  if (X.n_cols != m.dim()) throw DimensionMismatch(m.dim(), X.n_cols);
  const std::size_t d = m.dim();
  // Rows are sparse: start every row at |w_i * mu_i| and correct the
  // coordinates that are present.
  std::vector<double> at_zero(d);
  for (std::size_t i = 0; i < d; ++i) at_zero[i] = std::abs(m.weights[i] * m.background_means[i]);
  std::vector<double> sum(d, 0.0);
  std::vector<std::size_t> present(d, 0);
  for (const auto& row : X.rows) {
    if (row.dim != d) throw DimensionMismatch(d, row.dim);
    for (std::size_t k = 0; k < row.nnz(); ++k) {
      const auto i = row.indices[k];
      sum[i] += std::abs(m.weights[i] * (row.values[k] - m.background_means[i]));
      ++present[i];
    }
  }
  const auto n = static_cast<double>(X.rows.size());
  Attribution out;
  out.scope = Scope::kGlobal;
  out.base_value = base_value(m);
  out.scores.resize(d);
  for (std::size_t i = 0; i < d; ++i) {
    const double absent = static_cast<double>(X.rows.size() - present[i]);
    out.scores[i] = (sum[i] + absent * at_zero[i]) / n;
  }
  return out;
}

std::vector<std::size_t> ranking(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

}  // namespace tracexp::xai
