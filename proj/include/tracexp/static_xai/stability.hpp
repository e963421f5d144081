#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "tracexp/errors.hpp"
#include "tracexp/rng.hpp"
#include "tracexp/static_xai/logreg.hpp"
#include "tracexp/static_xai/sparse.hpp"
#include "tracexp/static_xai/spearman.hpp"

namespace tracexp::xai {

enum class Perturbation { kTokenDropout, kBootstrapRetrain, kIdentity };

std::string_view to_string(Perturbation p);
Perturbation parse_perturbation(std::string_view s);  // throws DataError

struct StabilityConfig {
  std::size_t k = 10;
  int n_perturb = 20;
  Perturbation perturbation = Perturbation::kTokenDropout;
  double rate = 0.1;  // token dropout probability
  std::uint64_t seed = 42;
  // Worker threads over instances; 0 = hardware concurrency. The explain
  // function must be safe to call concurrently when this is not 1.
  unsigned threads = 1;

  void validate() const;  // throws DataError
};

struct StabilityResult {
  double mean_rho = 0.0;
  std::size_t pairs_evaluated = 0;
  std::size_t pairs_skipped = 0;  // undefined correlation
  std::vector<double> rhos;       // instance-major; NaN where skipped
};

// Drops each whitespace-separated token independently with probability rate.
std::string token_dropout(std::string_view text, double rate, Rng& rng);

// Zeroes each nonzero coordinate independently with probability rate.
SparseVector token_dropout(const SparseVector& x, double rate, Rng& rng);

namespace detail {
inline constexpr std::uint64_t kStabilitySalt = 0x737461626c;  // "stabl"

unsigned worker_count(unsigned requested, std::size_t jobs);

StabilityResult reduce(std::vector<double> rhos);
}  // namespace detail

// For each instance and draw r, compares the top-k ranking of
// explain(instance) against explain(perturb(instance, rng_r)) with
// topk_spearman and averages over all pairs. rng_r depends only on
// (seed, instance index, r), so results do not depend on threads.
// Throws UndefinedCorrelation when every pair is undefined.
template <class Instance, class ExplainFn, class PerturbFn>
StabilityResult stability_score(const ExplainFn& explain, std::span<const Instance> instances,
                                const StabilityConfig& config, const PerturbFn& perturb) {
  config.validate();
  if (instances.empty()) throw DataError("stability needs at least one instance");
  const auto per = static_cast<std::size_t>(config.n_perturb);
  std::vector<double> rhos(instances.size() * per, std::numeric_limits<double>::quiet_NaN());
  std::vector<std::exception_ptr> errors(instances.size());

  auto run_instance = [&](std::size_t i) {
    try {
      const std::vector<double> base = explain(instances[i]);
      if (config.k > base.size()) {
        throw DataError("stability k exceeds the feature count");
      }
      for (std::size_t r = 0; r < per; ++r) {
        Rng rng(derive_stream_seed(config.seed, detail::kStabilitySalt, i * per + r));
        const std::vector<double> other = explain(perturb(instances[i], rng));
        try {
          rhos[i * per + r] = topk_spearman(base, other, config.k);
        } catch (const UndefinedCorrelation&) {
        }
      }
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };

  const unsigned workers = detail::worker_count(config.threads, instances.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < instances.size(); ++i) run_instance(i);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < instances.size(); i += workers) run_instance(i);
      });
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return detail::reduce(std::move(rhos));
}

template <class Instance, class ExplainFn>
StabilityResult stability_identity(const ExplainFn& explain, std::span<const Instance> instances,
                                   const StabilityConfig& config) {
  return stability_score<Instance>(explain, instances, config,
                                   [](const Instance& x, Rng&) { return x; });
}

// Bootstrap-retrain mode: each draw resamples the training rows with
// replacement, retrains, and compares the local SHAP |phi| ranking of every
// instance under the original and the retrained model. A resample with a
// single class is drawn again (up to 100 times) before the draw is skipped.
StabilityResult stability_bootstrap(const SparseMatrix& X, std::span<const int> y,
                                    const SparseMatrix& instances, const StabilityConfig& config,
                                    const LogRegConfig& train_config = {});

}  // namespace tracexp::xai
