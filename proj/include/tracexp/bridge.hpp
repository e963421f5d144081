#pragma once

#include <array>
#include <string>
#include <vector>

#include "tracexp/outcome_stats.hpp"
#include "tracexp/rubric.hpp"
#include "tracexp/rubric_judge.hpp"
#include "tracexp/static_xai/logreg.hpp"
#include "tracexp/static_xai/sparse.hpp"

namespace tracexp {

// Which flag value is encoded as 1. Weight signs depend on this choice;
// mean |SHAP| scores do not.
enum class FeaturePolarity { kViolation, kSatisfied };

// One row per run, six columns in canonical rubric order.
struct RubricDesignMatrix {
  xai::SparseMatrix X;
  std::vector<int> labels;  // 1 = success
  std::vector<std::string> run_ids;
};

// Throws EmptyMatrix.
RubricDesignMatrix flags_to_features(const FlagMatrix& m,
                                     FeaturePolarity polarity = FeaturePolarity::kViolation);

struct BridgeConfig {
  xai::LogRegConfig train;
  FeaturePolarity polarity = FeaturePolarity::kViolation;
};

struct BridgeReport {
  std::array<double, kNumRubrics> mean_abs_shap{};  // canonical order
  std::array<double, kNumRubrics> weights{};
  std::vector<RubricId> ranking;  // descending score, ties in canonical order
  double bias = 0.0;
  double base_value = 0.0;
  FeaturePolarity polarity = FeaturePolarity::kViolation;
  int iterations = 0;
  double final_loss = 0.0;
  double grad_norm = 0.0;
  bool converged = false;
  std::vector<std::string> run_ids;
  std::vector<std::array<std::uint8_t, kNumRubrics>> features;  // per run
  std::vector<std::array<double, kNumRubrics>> local_shap;      // per run
};

// Trains the success surrogate on the rubric features and ranks rubrics by
// mean |SHAP|. Throws EmptyMatrix or DegenerateOutcomeClass.
BridgeReport run_bridge(const FlagMatrix& m, const BridgeConfig& config = {});

struct ParadigmRow {
  RubricId rubric = RubricId::kIntentAlignment;
  double mean_abs_shap = 0.0;
  int shap_rank = 0;  // 1-based
  double delta_prev = 0.0;
  Ratio prevalence_ratio;
  Ratio rr;
};

struct ParadigmSummary {
  std::vector<ParadigmRow> rows;  // canonical order
  std::int64_t n_runs = 0;
};

// Side-by-side correlative (surrogate) and diagnostic (trace statistics)
// signals. Throws CorpusMismatch unless both cover the same run ids.
ParadigmSummary paradigm_summary(const BridgeReport& report, const StatsReport& stats);

}  // namespace tracexp
