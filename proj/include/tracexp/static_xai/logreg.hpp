#pragma once

#include <span>
#include <vector>

#include "tracexp/static_xai/sparse.hpp"

namespace tracexp::xai {

// Linear scorer shared by the text classifier and the rubric surrogate.
// background_means is the SHAP reference point (training column means).
struct LinearModel {
  std::vector<double> weights;
  double bias = 0.0;
  std::vector<double> background_means;

  std::size_t dim() const { return weights.size(); }
  void validate() const;  // equal dimensions, all finite; throws DataError
  bool operator==(const LinearModel&) const = default;
};

struct LogRegConfig {
  int max_iter = 500;
  double tol = 1e-4;    // on the max-norm of the objective gradient
  double l2 = 1.0;      // penalty (l2 / 2) * ||w||^2, bias unpenalised
  bool balanced_class_weight = true;  // weight N / (2 * N_c) for class c
  int lbfgs_memory = 10;
};

struct TrainResult {
  LinearModel model;
  int iterations = 0;
  double grad_norm = 0.0;
  double final_loss = 0.0;
  bool converged = false;  // grad_norm <= tol
};

// Minimises the class-weighted logistic loss (summed over examples) plus the
// L2 penalty with L-BFGS. Labels must be 0/1; throws SingleClassInput when
// only one class is present and DimensionMismatch on ragged input.
TrainResult train_logreg(const SparseMatrix& X, std::span<const int> y,
                         const LogRegConfig& config = {});

double sigmoid(double z);

// w . x + b; throws DimensionMismatch.
double margin(const LinearModel& m, const SparseVector& x);
double margin(const LinearModel& m, std::span<const double> x);

// sigmoid(w . x + b); throws DimensionMismatch.
double predict_proba(const LinearModel& m, const SparseVector& x);
double predict_proba(const LinearModel& m, std::span<const double> x);

}  // namespace tracexp::xai
