#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "tracexp/static_xai/logreg.hpp"
#include "tracexp/static_xai/sparse.hpp"

namespace tracexp::xai {

enum class Scope { kLocal, kGlobal };

std::string_view to_string(Scope s);

// Per-feature scores in log-odds space. For a local attribution
// sum(scores) + base_value equals the model margin at the instance.
struct Attribution {
  std::vector<double> scores;
  double base_value = 0.0;
  Scope scope = Scope::kLocal;
};

// phi_i = w_i * (x_i - mu_i); base_value = w . mu + b. Throws DimensionMismatch.
Attribution shap_linear(const LinearModel& m, const SparseVector& x);
Attribution shap_linear(const LinearModel& m, std::span<const double> x);

// score_i = mean over rows of |phi_i|. Throws DataError on no rows.
Attribution mean_abs_shap(const LinearModel& m, const SparseMatrix& X);

// Feature indices ordered by descending score; ties keep ascending index.
std::vector<std::size_t> ranking(std::span<const double> scores);

}  // namespace tracexp::xai
