#include "tracexp/bridge.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tracexp/errors.hpp"
#include "tracexp/static_xai/linear_shap.hpp"

namespace tracexp {

RubricDesignMatrix flags_to_features(const FlagMatrix& m, FeaturePolarity polarity) {
  if (m.empty()) throw EmptyMatrix();
  if (m.success.size() != m.rows.size()) {
    throw DimensionMismatch(m.rows.size(), m.success.size());
  }
  RubricDesignMatrix out;
  out.X.n_cols = kNumRubrics;
  out.X.rows.reserve(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    std::vector<double> dense(kNumRubrics, 0.0);
    for (std::size_t r = 0; r < kNumRubrics; ++r) {
      const bool violated = m.rows[i].flags[r] != 0;
      const bool one = polarity == FeaturePolarity::kViolation ? violated : !violated;
      dense[r] = one ? 1.0 : 0.0;
    }
    out.X.rows.push_back(xai::SparseVector::from_dense(dense));
    out.labels.push_back(m.success[i] ? 1 : 0);
    out.run_ids.push_back(m.rows[i].run_id);
  }
  return out;
}

BridgeReport run_bridge(const FlagMatrix& m, const BridgeConfig& config) {
  const RubricDesignMatrix design = flags_to_features(m, config.polarity);
  const auto n_success = std::count(design.labels.begin(), design.labels.end(), 1);
  if (n_success == 0 || n_success == static_cast<long>(design.labels.size())) {
    throw DegenerateOutcomeClass("bridge needs both successful and failed runs");
  }
  const xai::TrainResult trained = xai::train_logreg(design.X, design.labels, config.train);
  const xai::Attribution global = xai::mean_abs_shap(trained.model, design.X);

  BridgeReport report;
  std::copy(global.scores.begin(), global.scores.end(), report.mean_abs_shap.begin());
  std::copy(trained.model.weights.begin(), trained.model.weights.end(), report.weights.begin());
  for (std::size_t i : xai::ranking(global.scores)) report.ranking.push_back(kCanonicalRubrics[i]);
  report.bias = trained.model.bias;
  report.base_value = global.base_value;
  report.polarity = config.polarity;
  report.iterations = trained.iterations;
  report.final_loss = trained.final_loss;
  report.grad_norm = trained.grad_norm;
  report.converged = trained.converged;
  report.run_ids = design.run_ids;
  for (const auto& row : design.X.rows) {
    std::array<std::uint8_t, kNumRubrics> f{};
    for (std::size_t k = 0; k < row.nnz(); ++k) f[row.indices[k]] = 1;
    report.features.push_back(f);
    const auto local = xai::shap_linear(trained.model, row);
    std::array<double, kNumRubrics> phi{};
    std::copy(local.scores.begin(), local.scores.end(), phi.begin());
    report.local_shap.push_back(phi);
  }
  return report;
}

ParadigmSummary paradigm_summary(const BridgeReport& report, const StatsReport& stats) {
  auto a = report.run_ids;
  auto b = stats.run_ids;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  if (a != b) {
    throw CorpusMismatch("surrogate and statistics were computed on different run sets");
  }
  if (stats.rows.size() != kNumRubrics) {
    throw CorpusMismatch("statistics report does not cover all rubrics");
  }
  ParadigmSummary out;
  out.n_runs = static_cast<std::int64_t>(a.size());
  for (std::size_t r = 0; r < kNumRubrics; ++r) {
    const RubricId id = kCanonicalRubrics[r];
    const auto it = std::find_if(stats.rows.begin(), stats.rows.end(),
                                 [&](const StatsRow& s) { return s.rubric == id; });
    if (it == stats.rows.end()) throw CorpusMismatch("statistics report is missing a rubric");
    ParadigmRow row;
    row.rubric = id;
    row.mean_abs_shap = report.mean_abs_shap[r];
    row.shap_rank = static_cast<int>(
        std::find(report.ranking.begin(), report.ranking.end(), id) - report.ranking.begin() + 1);
    row.delta_prev = it->prevalence.delta;
    row.prevalence_ratio = it->prevalence.ratio;
    row.rr = it->reliability.rr;
    out.rows.push_back(row);
  }
  return out;
}

}  // namespace tracexp
