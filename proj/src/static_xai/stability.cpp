#include "tracexp/static_xai/stability.hpp"

#include <sstream>

#include "tracexp/static_xai/linear_shap.hpp"

namespace tracexp::xai {

std::string_view to_string(Perturbation p) {
  switch (p) {
    case Perturbation::kTokenDropout: return "token_dropout";
    case Perturbation::kBootstrapRetrain: return "bootstrap_retrain";
    case Perturbation::kIdentity: return "identity";
  }
  return "?";
}

Perturbation parse_perturbation(std::string_view s) {
  if (s == "token_dropout") return Perturbation::kTokenDropout;
  if (s == "bootstrap_retrain") return Perturbation::kBootstrapRetrain;
  if (s == "identity") return Perturbation::kIdentity;
  throw DataError("unknown perturbation '" + std::string(s) + "'");
}

void StabilityConfig::validate() const {
  if (k < 1) throw DataError("stability k must be at least 1");
  if (n_perturb < 1) throw DataError("stability n_perturb must be at least 1");
  if (perturbation == Perturbation::kTokenDropout && !(rate > 0.0 && rate < 1.0)) {
    throw DataError("token dropout rate must be in (0, 1)");
  }
}

std::string token_dropout(std::string_view text, double rate, Rng& rng) {
  std::istringstream in{std::string(text)};
  std::string token;
  std::string out;
  while (in >> token) {
    if (rng.bernoulli(rate)) continue;
    if (!out.empty()) out += ' ';
    out += token;
  }
  return out;
}

SparseVector token_dropout(const SparseVector& x, double rate, Rng& rng) {
  SparseVector out;
  out.dim = x.dim;
  for (std::size_t k = 0; k < x.nnz(); ++k) {
    if (rng.bernoulli(rate)) continue;
    out.indices.push_back(x.indices[k]);
    out.values.push_back(x.values[k]);
  }
  return out;
}

namespace detail {

unsigned worker_count(unsigned requested, std::size_t jobs) {
  unsigned n = requested == 0 ? std::max(1u, std::thread::hardware_concurrency()) : requested;
  return static_cast<unsigned>(std::min<std::size_t>(n, jobs));
}

StabilityResult reduce(std::vector<double> rhos) {
  StabilityResult out;
  double sum = 0.0;
  for (double r : rhos) {
    if (std::isnan(r)) {
      ++out.pairs_skipped;
    } else {
      sum += r;
      ++out.pairs_evaluated;
    }
  }
  if (out.pairs_evaluated == 0) throw UndefinedCorrelation("every stability pair was undefined");
  out.mean_rho = sum / static_cast<double>(out.pairs_evaluated);
  out.rhos = std::move(rhos);
  return out;
}

}  // namespace detail

namespace {

std::vector<double> abs_shap(const LinearModel& m, const SparseVector& x) {
  auto scores = shap_linear(m, x).scores;
  for (double& s : scores) s = std::abs(s);
  return scores;
}

}  // namespace

StabilityResult stability_bootstrap(const SparseMatrix& X, std::span<const int> y,
                                    const SparseMatrix& instances, const StabilityConfig& config,
                                    const LogRegConfig& train_config) {
  config.validate();
  if (instances.rows.empty()) throw DataError("stability needs at least one instance");
  if (config.k > X.n_cols) throw DataError("stability k exceeds the feature count");
  const LinearModel base_model = train_logreg(X, y, train_config).model;
  std::vector<std::vector<double>> base;
  base.reserve(instances.rows.size());
  for (const auto& row : instances.rows) base.push_back(abs_shap(base_model, row));

  const auto per = static_cast<std::size_t>(config.n_perturb);
  const std::size_t n_inst = instances.rows.size();
  std::vector<double> rhos(n_inst * per, std::numeric_limits<double>::quiet_NaN());
  std::vector<std::exception_ptr> errors(per);

  auto run_draw = [&](std::size_t r) {
    try {
      Rng rng(derive_stream_seed(config.seed, detail::kStabilitySalt ^ 0xb0075, r));
      SparseMatrix Xb;
      Xb.n_cols = X.n_cols;
      std::vector<int> yb;
      bool ok = false;
      for (int attempt = 0; attempt < 100 && !ok; ++attempt) {
        Xb.rows.clear();
        yb.clear();
        int pos = 0;
        for (std::size_t i = 0; i < X.rows.size(); ++i) {
          const std::size_t pick = rng.index(X.rows.size());
          Xb.rows.push_back(X.rows[pick]);
          yb.push_back(y[pick]);
          pos += y[pick];
        }
        ok = pos > 0 && pos < static_cast<int>(yb.size());
      }
      if (!ok) return;
      const LinearModel model = train_logreg(Xb, yb, train_config).model;
      for (std::size_t i = 0; i < n_inst; ++i) {
        try {
          rhos[i * per + r] = topk_spearman(base[i], abs_shap(model, instances.rows[i]), config.k);
        } catch (const UndefinedCorrelation&) {
        }
      }
    } catch (...) {
      errors[r] = std::current_exception();
    }
  };

  const unsigned workers = detail::worker_count(config.threads, per);
  if (workers <= 1) {
    for (std::size_t r = 0; r < per; ++r) run_draw(r);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t r = w; r < per; r += workers) run_draw(r);
      });
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return detail::reduce(std::move(rhos));
}

}  // namespace tracexp::xai
