#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace tracexp {

// The six behavioural rubrics, in canonical order. Every table, matrix column
// and tie-break in the toolkit follows this order.
enum class RubricId : std::uint8_t {
  kIntentAlignment = 0,
  kPlanAdherence,
  kToolCorrectness,
  kToolChoiceAccuracy,
  kStateTrackingConsistency,
  kErrorRecovery,
};

inline constexpr std::size_t kNumRubrics = 6;

inline constexpr std::array<RubricId, kNumRubrics> kCanonicalRubrics = {
    RubricId::kIntentAlignment,    RubricId::kPlanAdherence,
    RubricId::kToolCorrectness,    RubricId::kToolChoiceAccuracy,
    RubricId::kStateTrackingConsistency, RubricId::kErrorRecovery,
};

constexpr std::size_t rubric_index(RubricId id) { return static_cast<std::size_t>(id); }

// Stable machine key, e.g. "state_tracking_consistency".
std::string_view rubric_key(RubricId id);

// Human-readable table label, e.g. "State Tracking Consistency".
std::string_view rubric_display_name(RubricId id);

std::optional<RubricId> parse_rubric_key(std::string_view key);

struct Rubric {
  RubricId id;
  std::string name;
  std::string description;  // judge prompt text
};

// All six rubrics with their prompt descriptions, canonical order.
const std::vector<Rubric>& rubric_registry();

using RubricSet = std::set<RubricId>;

inline RubricSet all_rubrics() {
  return RubricSet(kCanonicalRubrics.begin(), kCanonicalRubrics.end());
}

}  // namespace tracexp
