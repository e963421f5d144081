#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tracexp/rubric_judge.hpp"
#include "tracexp/static_xai/linear_shap.hpp"
#include "tracexp/static_xai/pdp.hpp"
#include "tracexp/trace_model.hpp"

namespace tracexp::mep {

inline constexpr int kPacketVersion = 1;

enum class Paradigm { kStatic, kAgentic };

using xai::Scope;

struct FeatureScore {
  std::string name;
  std::int64_t index = 0;
  double score = 0.0;
  bool operator==(const FeatureScore&) const = default;
};

struct PdpReference {
  std::string feature;
  std::vector<xai::PdpPoint> curve;
  bool operator==(const PdpReference&) const = default;
};

struct AttributionScores {
  std::vector<FeatureScore> features;  // descending |score|
  double base_value = 0.0;
  std::optional<PdpReference> pdp;  // global scope only
  bool operator==(const AttributionScores&) const = default;
};

struct TraceAccountEntry {
  std::int64_t step = 0;  // Step::index
  std::string reasoning;
  std::string action;
  std::string observation;
  bool operator==(const TraceAccountEntry&) const = default;
};

struct TraceAccount {
  std::vector<TraceAccountEntry> entries;
  std::vector<std::int64_t> focus_steps;  // steps singled out for review
  bool operator==(const TraceAccount&) const = default;
};

using Artifact = std::variant<AttributionScores, TraceAccount>;

struct InstanceContext {
  std::string model_digest;
  // Local scope: the explained input and the model's verdict.
  std::optional<std::string> input_text;
  std::optional<int> predicted_label;
  std::optional<double> confidence;
  // Global scope: the corpus the attribution was aggregated over.
  std::optional<std::string> corpus_digest;
  std::optional<std::int64_t> n_instances;
  bool operator==(const InstanceContext&) const = default;
};

struct StepDigest {
  std::int64_t step = 0;
  std::string action_kind;
  std::string tool_name;  // empty for messages
  std::string step_digest;
  std::string state_digest;
  bool operator==(const StepDigest&) const = default;
};

struct TrajectoryContext {
  std::string run_id;
  std::string task_id;
  std::string benchmark;
  std::string trace_digest;  // sha256 of the canonical trajectory record
  std::vector<StepDigest> steps;
  bool operator==(const TrajectoryContext&) const = default;
};

using Context = std::variant<InstanceContext, TrajectoryContext>;

enum class SignalKind { kStabilityRho, kRubricFlags, kReplayConsistent, kTraceIntegrity };

using SignalValue = std::variant<double, FlagVector, bool, std::vector<IntegrityViolation>>;

struct VerificationSignal {
  SignalKind kind = SignalKind::kStabilityRho;
  SignalValue value;
  bool operator==(const VerificationSignal&) const = default;
};

struct ExplanationPacket {
  int version = kPacketVersion;
  Scope scope = Scope::kLocal;
  Paradigm paradigm = Paradigm::kStatic;
  Artifact artifact;
  Context context;
  std::vector<VerificationSignal> verification;
  bool operator==(const ExplanationPacket&) const = default;
};

std::string_view to_string(Paradigm p);
std::string_view to_string(SignalKind k);

// Throws InvariantViolation when a packet breaks a type invariant: paradigm
// and context disagree, empty verification, mistyped signal value, rho
// outside [-1, 1], or a step reference missing from the embedded context.
void validate(const ExplanationPacket& p);

struct StaticModelRef {
  std::string model_digest;
  std::vector<std::string> feature_names;  // column names, aligned with scores
};

struct LocalInstance {
  std::string input_text;
  int predicted_label = 0;
  double confidence = 0.0;  // probability of the predicted label
};

// Keeps the top_n features by |score| (all when top_n == 0).
ExplanationPacket build_static_mep(const StaticModelRef& model, const LocalInstance& instance,
                                   const xai::Attribution& attribution, double stability,
                                   std::size_t top_n = 20);

ExplanationPacket build_global_static_mep(const StaticModelRef& model,
                                          const xai::Attribution& attribution, double stability,
                                          std::string corpus_digest, std::int64_t n_instances,
                                          std::optional<PdpReference> pdp = std::nullopt,
                                          std::size_t top_n = 20);

// focus_steps defaults to the steps whose observation is an error. Throws
// InvariantViolation when flags belong to another run and
// DanglingStepReference when a focus step is not in t.
ExplanationPacket build_agentic_mep(const Trajectory& t, const FlagVector& flags, bool replay_ok,
                                    const std::vector<IntegrityViolation>& integrity,
                                    std::optional<std::vector<std::int64_t>> focus_steps = {});

// Canonical JSON with stable key order and no trailing newline.
std::string serialize(const ExplanationPacket& p);
nlohmann::ordered_json to_json(const ExplanationPacket& p);

// Throws SchemaVersionMismatch for another "v", MalformedPacket for anything
// unparseable or invariant-breaking.
ExplanationPacket deserialize(std::string_view bytes);

}  // namespace tracexp::mep
