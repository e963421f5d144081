#include "tracexp/static_xai/logreg.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

#include "tracexp/errors.hpp"

namespace tracexp::xai {

namespace {

double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// Objective over theta = [w..., b].
class Objective {
 public:
  Objective(const SparseMatrix& X, std::span<const int> y, std::vector<double> sample_weight,
            double l2)
      : X_(X), y_(y), sw_(std::move(sample_weight)), l2_(l2), d_(X.n_cols) {}

  double value_and_grad(const std::vector<double>& theta, std::vector<double>& grad) const {
    grad.assign(theta.size(), 0.0);
    const double b = theta[d_];
    double loss = 0.0;
    for (std::size_t i = 0; i < X_.rows.size(); ++i) {
      const SparseVector& row = X_.rows[i];
      double z = b;
      for (std::size_t k = 0; k < row.nnz(); ++k) z += theta[row.indices[k]] * row.values[k];
      loss += sw_[i] * (softplus(z) - y_[i] * z);
      const double r = sw_[i] * (sigmoid(z) - y_[i]);
      for (std::size_t k = 0; k < row.nnz(); ++k) grad[row.indices[k]] += r * row.values[k];
      grad[d_] += r;
    }
    for (std::size_t j = 0; j < d_; ++j) {
      loss += 0.5 * l2_ * theta[j] * theta[j];
      grad[j] += l2_ * theta[j];
    }
    return loss;
  }

 private:
  const SparseMatrix& X_;
  std::span<const int> y_;
  std::vector<double> sw_;
  double l2_;
  std::size_t d_;
};

}  // namespace

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void LinearModel::validate() const {
  if (background_means.size() != weights.size()) {
    throw DimensionMismatch(weights.size(), background_means.size());
  }
  auto finite = [](double x) { return std::isfinite(x); };
  if (!std::all_of(weights.begin(), weights.end(), finite) ||
      !std::all_of(background_means.begin(), background_means.end(), finite) ||
      !std::isfinite(bias)) {
    throw DataError("linear model has non-finite parameters");
  }
}

double margin(const LinearModel& m, const SparseVector& x) {
  if (x.dim != m.dim()) throw DimensionMismatch(m.dim(), x.dim);
  return x.dot(m.weights) + m.bias;
}

double margin(const LinearModel& m, std::span<const double> x) {
  if (x.size() != m.dim()) throw DimensionMismatch(m.dim(), x.size());
  return std::inner_product(x.begin(), x.end(), m.weights.begin(), 0.0) + m.bias;
}

double predict_proba(const LinearModel& m, const SparseVector& x) { return sigmoid(margin(m, x)); }

double predict_proba(const LinearModel& m, std::span<const double> x) {
  return sigmoid(margin(m, x));
}

TrainResult train_logreg(const SparseMatrix& X, std::span<const int> y, const LogRegConfig& config) {
  if (X.rows.size() != y.size()) throw DimensionMismatch(X.rows.size(), y.size());
  for (const auto& row : X.rows) {
    if (row.dim != X.n_cols) throw DimensionMismatch(X.n_cols, row.dim);
  }
  std::size_t n_pos = 0;
  for (int label : y) {
    if (label != 0 && label != 1) throw DataError("logistic regression labels must be 0 or 1");
    n_pos += static_cast<std::size_t>(label);
  }
  const std::size_t n = y.size();
  if (n_pos == 0 || n_pos == n) throw SingleClassInput();

  std::vector<double> sample_weight(n, 1.0);
  if (config.balanced_class_weight) {
    const double w_pos = static_cast<double>(n) / (2.0 * static_cast<double>(n_pos));
    const double w_neg = static_cast<double>(n) / (2.0 * static_cast<double>(n - n_pos));
    for (std::size_t i = 0; i < n; ++i) sample_weight[i] = y[i] == 1 ? w_pos : w_neg;
  }
  const Objective objective(X, y, std::move(sample_weight), config.l2);

  const std::size_t p = X.n_cols + 1;
  std::vector<double> theta(p, 0.0);
  std::vector<double> grad;
  double loss = objective.value_and_grad(theta, grad);

  std::deque<std::vector<double>> s_hist;
  std::deque<std::vector<double>> y_hist;
  std::deque<double> rho_hist;

  TrainResult result;
  int iter = 0;
  double gnorm = max_abs(grad);
  std::vector<double> direction(p);
  std::vector<double> candidate(p);
  std::vector<double> cand_grad;
  while (gnorm > config.tol && iter < config.max_iter) {
    // Two-loop recursion for direction = -H * grad.
    direction = grad;
    std::vector<double> alpha(s_hist.size());
    for (std::size_t k = s_hist.size(); k-- > 0;) {
      alpha[k] = rho_hist[k] * dot(s_hist[k], direction);
      for (std::size_t j = 0; j < p; ++j) direction[j] -= alpha[k] * y_hist[k][j];
    }
    double gamma = 1.0;
    if (!s_hist.empty()) {
      gamma = dot(s_hist.back(), y_hist.back()) / dot(y_hist.back(), y_hist.back());
    } else {
      gamma = 1.0 / std::max(1.0, std::sqrt(dot(grad, grad)));
    }
    for (double& v : direction) v *= gamma;
    for (std::size_t k = 0; k < s_hist.size(); ++k) {
      const double beta = rho_hist[k] * dot(y_hist[k], direction);
      for (std::size_t j = 0; j < p; ++j) direction[j] += s_hist[k][j] * (alpha[k] - beta);
    }
    for (double& v : direction) v = -v;

    double slope = dot(grad, direction);
    if (slope >= 0) {
      // Not a descent direction; restart from steepest descent.
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      const double scale = 1.0 / std::max(1.0, std::sqrt(dot(grad, grad)));
      for (std::size_t j = 0; j < p; ++j) direction[j] = -grad[j] * scale;
      slope = dot(grad, direction);
    }

    // Backtracking Armijo line search.
    double step = 1.0;
    double cand_loss = 0.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      for (std::size_t j = 0; j < p; ++j) candidate[j] = theta[j] + step * direction[j];
      cand_loss = objective.value_and_grad(candidate, cand_grad);
      if (cand_loss <= loss + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    ++iter;
    // Stop once the loss no longer moves in floating point.
    if (!accepted || !(cand_loss < loss)) break;

    std::vector<double> s(p);
    std::vector<double> yv(p);
    for (std::size_t j = 0; j < p; ++j) {
      s[j] = candidate[j] - theta[j];
      yv[j] = cand_grad[j] - grad[j];
    }
    const double sy = dot(s, yv);
    if (sy > 1e-12) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(yv));
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > config.lbfgs_memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    theta.swap(candidate);
    grad.swap(cand_grad);
    loss = cand_loss;
    gnorm = max_abs(grad);
  }

  result.model.weights.assign(theta.begin(), theta.begin() + static_cast<std::ptrdiff_t>(X.n_cols));
  result.model.bias = theta[X.n_cols];
  result.model.background_means = X.column_means();
  result.iterations = iter;
  result.grad_norm = gnorm;
  result.final_loss = loss;
  result.converged = gnorm <= config.tol;
  return result;
}

}  // namespace tracexp::xai
