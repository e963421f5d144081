#include "tracexp/static_xai/lime.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "tracexp/errors.hpp"
#include "tracexp/rng.hpp"

namespace tracexp::xai {

namespace {
constexpr std::uint64_t kLimeSalt = 0x6c696d65;  // "lime"
}

LimeExplanation lime_explain(const PredictFn& predict_fn, const SparseVector& instance,
                             const LimeConfig& config) {
  const std::size_t d = instance.nnz();
  if (d == 0) throw DegenerateInstance();
  if (config.n_samples < 2) throw DataError("LIME needs at least two samples");
  if (config.k == 0) throw DataError("LIME k must be positive");
  const double width = config.kernel_width.value_or(0.75 * std::sqrt(static_cast<double>(d)));
  if (!(width > 0.0)) throw DataError("LIME kernel width must be positive");

  const auto n = static_cast<Eigen::Index>(config.n_samples);
  const auto dd = static_cast<Eigen::Index>(d);
  Eigen::MatrixXd Z = Eigen::MatrixXd::Ones(n, dd);
  Eigen::VectorXd target(n);
  Eigen::VectorXd weight(n);

  Rng rng(derive_stream_seed(config.seed, kLimeSalt, 0));
  std::vector<std::size_t> cols(d);
  for (Eigen::Index s = 0; s < n; ++s) {
    std::size_t removed = 0;
    if (s > 0) {
      removed = static_cast<std::size_t>(rng.uniform_int(1, static_cast<std::int64_t>(d)));
      std::iota(cols.begin(), cols.end(), 0);
      rng.shuffle(cols);
      for (std::size_t t = 0; t < removed; ++t) Z(s, static_cast<Eigen::Index>(cols[t])) = 0.0;
    }
    SparseVector masked;
    masked.dim = instance.dim;
    for (std::size_t c = 0; c < d; ++c) {
      if (Z(s, static_cast<Eigen::Index>(c)) != 0.0) {
        masked.indices.push_back(instance.indices[c]);
        masked.values.push_back(instance.values[c]);
      }
    }
    target(s) = predict_fn(masked);
    const double dist2 = static_cast<double>(removed);
    weight(s) = std::sqrt(std::exp(-dist2 / (width * width)));
  }

  // Weighted ridge with an unpenalised intercept: centre on weighted means.
  const double wsum = weight.sum();
  const Eigen::RowVectorXd zmean = (weight.transpose() * Z) / wsum;
  const double ymean = weight.dot(target) / wsum;
  const Eigen::MatrixXd Zc = Z.rowwise() - zmean;
  const Eigen::VectorXd yc = target.array() - ymean;
  Eigen::MatrixXd A = Zc.transpose() * weight.asDiagonal() * Zc;
  A.diagonal().array() += config.ridge_alpha;
  const Eigen::VectorXd rhs = Zc.transpose() * weight.asDiagonal() * yc;
  const Eigen::VectorXd coef = A.ldlt().solve(rhs);
  const double intercept = ymean - zmean.dot(coef);

  std::vector<LimeFeature> all(d);
  for (std::size_t c = 0; c < d; ++c) {
    all[c] = {instance.indices[c], coef(static_cast<Eigen::Index>(c))};
  }
  std::stable_sort(all.begin(), all.end(), [](const LimeFeature& a, const LimeFeature& b) {
    return std::abs(a.weight) > std::abs(b.weight);
  });
  all.resize(std::min(config.k, d));

  LimeExplanation out;
  out.features = std::move(all);
  out.intercept = intercept;
  out.local_prediction = intercept + coef.sum();
  return out;
}

}  // namespace tracexp::xai
