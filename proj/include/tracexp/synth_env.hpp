#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "tracexp/rubric.hpp"
#include "tracexp/trace_model.hpp"

namespace tracexp::synth {

// Per-rubric injection probabilities plus the fault stream seed.
struct FaultSpec {
  std::array<double, kNumRubrics> probability{};  // canonical rubric order
  std::uint64_t seed = 0;

  double& operator[](RubricId id) { return probability[rubric_index(id)]; }
  double operator[](RubricId id) const { return probability[rubric_index(id)]; }
  bool operator==(const FaultSpec&) const = default;
};

// P(success | flags) = sigmoid(bias + sum_r weights[r] * flag_r). Weights are
// log-odds contributions to success, so a negative weight makes a violation
// push a run toward failure.
struct OutcomeModel {
  double bias = 0.0;
  std::array<double, kNumRubrics> weights{};

  double success_probability(const std::array<std::uint8_t, kNumRubrics>& flags) const;
  bool operator==(const OutcomeModel&) const = default;
};

struct RunTruth {
  std::array<std::uint8_t, kNumRubrics> flags{};
  bool success = false;

  bool operator==(const RunTruth&) const = default;
};

// Ground truth per run, in ordinal order; run_ids match the corpus.
struct GroundTruth {
  std::vector<std::string> run_ids;
  std::vector<RunTruth> runs;

  const RunTruth& at(const std::string& run_id) const;
  bool operator==(const GroundTruth&) const = default;
};

struct Corpus {
  std::vector<Trajectory> trajectories;
  GroundTruth truth;
};

struct ReplayConfig {
  std::uint64_t seed = 0;
  FaultSpec faults;
  OutcomeModel outcome;
  std::size_t n_runs = 0;  // size of the original generation
  std::size_t ordinal = 0;
};

inline constexpr std::size_t kMinSteps = 6;
inline constexpr std::size_t kMaxSteps = 20;

// Throws InvalidFaultSpec on probabilities outside [0,1] or non-finite
// outcome-model values.
void validate(const FaultSpec& faults, const OutcomeModel& outcome);

// Deterministic in (n_runs, faults, outcome, seed). Runs are independent and
// may be generated in parallel; the result is always in ordinal order.
Corpus generate_corpus(std::size_t n_runs, const FaultSpec& faults,
                       const OutcomeModel& outcome, std::uint64_t seed);

// Regenerates the run at `cfg.ordinal` without any stored state. Throws
// OrdinalOutOfRange if ordinal >= n_runs.
Trajectory replay(const ReplayConfig& cfg);

// Generates the run at `ordinal` together with its ground truth.
std::pair<Trajectory, RunTruth> generate_run(std::uint64_t seed, const FaultSpec& faults,
                                             const OutcomeModel& outcome,
                                             std::size_t ordinal);

std::string run_id_for(std::uint64_t seed, std::size_t ordinal);

// --- file formats ------------------------------------------------------------

struct SynthConfig {
  std::uint64_t seed = 0;
  std::size_t n_runs = 100;
  FaultSpec faults;
  OutcomeModel outcome;
};

// TOML layout:
//   seed = 7
//   runs = 100
//   [faults]            # probabilities keyed by rubric id, plus `seed`
//   [outcome]           # `bias`
//   [outcome.weights]   # keyed by rubric id
// Missing keys keep the values already in `base`.
SynthConfig parse_synth_config(std::string_view toml_text, SynthConfig base = {});
SynthConfig load_synth_config(const std::filesystem::path& path, SynthConfig base = {});

// One JSON object per line: {"run_id":..,"flags":{..six rubric keys..},"success":..}
void write_ground_truth(std::ostream& out, const GroundTruth& truth);
GroundTruth read_ground_truth(std::istream& in);

}  // namespace tracexp::synth
