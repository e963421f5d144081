#include "tracexp/mep.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tracexp/digest.hpp"
#include "tracexp/errors.hpp"

namespace tracexp::mep {

using OJson = nlohmann::ordered_json;

std::string_view to_string(Paradigm p) { return p == Paradigm::kStatic ? "static" : "agentic"; }

std::string_view to_string(SignalKind k) {
  switch (k) {
    case SignalKind::kStabilityRho: return "stability_rho";
    case SignalKind::kRubricFlags: return "rubric_flags";
    case SignalKind::kReplayConsistent: return "replay_consistent";
    case SignalKind::kTraceIntegrity: return "trace_integrity";
  }
  return "?";
}

namespace {

constexpr std::size_t kSummaryLimit = 240;

std::string clip(std::string s) {
  if (s.size() > kSummaryLimit) {
    s.resize(kSummaryLimit);
    s += "...";
  }
  return s;
}

bool value_matches(const VerificationSignal& s) {
  switch (s.kind) {
    case SignalKind::kStabilityRho: return std::holds_alternative<double>(s.value);
    case SignalKind::kRubricFlags: return std::holds_alternative<FlagVector>(s.value);
    case SignalKind::kReplayConsistent: return std::holds_alternative<bool>(s.value);
    case SignalKind::kTraceIntegrity:
      return std::holds_alternative<std::vector<IntegrityViolation>>(s.value);
  }
  return false;
}

std::vector<FeatureScore> top_features(const StaticModelRef& model, const xai::Attribution& a,
                                       std::size_t top_n) {
  if (!model.feature_names.empty() && model.feature_names.size() != a.scores.size()) {
    throw InvariantViolation("feature names do not match the attribution dimension");
  }
  std::vector<std::size_t> order(a.scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return std::abs(a.scores[x]) > std::abs(a.scores[y]);
  });
  if (top_n != 0 && order.size() > top_n) order.resize(top_n);
  std::vector<FeatureScore> out;
  for (std::size_t i : order) {
    out.push_back({model.feature_names.empty() ? "f" + std::to_string(i) : model.feature_names[i],
                   static_cast<std::int64_t>(i), a.scores[i]});
  }
  return out;
}

VerificationSignal stability_signal(double rho) {
  if (!std::isfinite(rho) || rho < -1.0 || rho > 1.0) {
    throw InvariantViolation("stability rho must lie in [-1, 1]");
  }
  return {SignalKind::kStabilityRho, rho};
}

}  // namespace

void validate(const ExplanationPacket& p) {
  if (p.version != kPacketVersion) throw InvariantViolation("unsupported packet version");
  const bool is_static = p.paradigm == Paradigm::kStatic;
  if (is_static != std::holds_alternative<InstanceContext>(p.context)) {
    throw InvariantViolation("paradigm and context type disagree");
  }
  if (is_static != std::holds_alternative<AttributionScores>(p.artifact)) {
    throw InvariantViolation("paradigm and artifact type disagree");
  }
  if (p.verification.empty()) throw InvariantViolation("verification is empty");
  for (const auto& s : p.verification) {
    if (!value_matches(s)) throw InvariantViolation("signal value does not match its kind");
    if (s.kind == SignalKind::kStabilityRho) {
      const double rho = std::get<double>(s.value);
      if (!std::isfinite(rho) || rho < -1.0 || rho > 1.0) {
        throw InvariantViolation("stability rho must lie in [-1, 1]");
      }
    }
    if (s.kind == SignalKind::kRubricFlags) {
      for (auto f : std::get<FlagVector>(s.value).flags) {
        if (f > 1) throw InvariantViolation("rubric flags must be 0 or 1");
      }
    }
  }
  if (is_static) {
    const auto& ctx = std::get<InstanceContext>(p.context);
    if (p.scope == Scope::kLocal &&
        (!ctx.input_text || !ctx.predicted_label || !ctx.confidence)) {
      throw InvariantViolation("local static packet needs input text, label and confidence");
    }
    if (ctx.confidence && !(*ctx.confidence >= 0.0 && *ctx.confidence <= 1.0)) {
      throw InvariantViolation("confidence must lie in [0, 1]");
    }
    const auto& art = std::get<AttributionScores>(p.artifact);
    if (art.pdp && p.scope != Scope::kGlobal) {
      throw InvariantViolation("PDP references belong to global packets");
    }
  } else {
    const auto& ctx = std::get<TrajectoryContext>(p.context);
    const auto& acc = std::get<TraceAccount>(p.artifact);
    auto resolves = [&](std::int64_t step) {
      return std::any_of(ctx.steps.begin(), ctx.steps.end(),
                         [&](const StepDigest& d) { return d.step == step; });
    };
    for (const auto& e : acc.entries) {
      if (!resolves(e.step)) throw InvariantViolation("trace account step does not resolve");
    }
    for (auto s : acc.focus_steps) {
      if (!resolves(s)) throw InvariantViolation("focus step does not resolve");
    }
    for (const auto& s : p.verification) {
      if (s.kind == SignalKind::kRubricFlags && std::get<FlagVector>(s.value).run_id != ctx.run_id) {
        throw InvariantViolation("rubric flags belong to another run");
      }
    }
  }
}

ExplanationPacket build_static_mep(const StaticModelRef& model, const LocalInstance& instance,
                                   const xai::Attribution& attribution, double stability,
                                   std::size_t top_n) {
  if (attribution.scope != Scope::kLocal) {
    throw InvariantViolation("local packet needs a local attribution");
  }
  ExplanationPacket p;
  p.scope = Scope::kLocal;
  p.paradigm = Paradigm::kStatic;
  p.artifact = AttributionScores{top_features(model, attribution, top_n), attribution.base_value,
                                 std::nullopt};
  InstanceContext ctx;
  ctx.model_digest = model.model_digest;
  ctx.input_text = instance.input_text;
  ctx.predicted_label = instance.predicted_label;
  ctx.confidence = instance.confidence;
  p.context = ctx;
  p.verification.push_back(stability_signal(stability));
  validate(p);
  return p;
}

ExplanationPacket build_global_static_mep(const StaticModelRef& model,
                                          const xai::Attribution& attribution, double stability,
                                          std::string corpus_digest, std::int64_t n_instances,
                                          std::optional<PdpReference> pdp, std::size_t top_n) {
  if (attribution.scope != Scope::kGlobal) {
    throw InvariantViolation("global packet needs a global attribution");
  }
  ExplanationPacket p;
  p.scope = Scope::kGlobal;
  p.paradigm = Paradigm::kStatic;
  p.artifact =
      AttributionScores{top_features(model, attribution, top_n), attribution.base_value, pdp};
  InstanceContext ctx;
  ctx.model_digest = model.model_digest;
  ctx.corpus_digest = std::move(corpus_digest);
  ctx.n_instances = n_instances;
  p.context = ctx;
  p.verification.push_back(stability_signal(stability));
  validate(p);
  return p;
}

ExplanationPacket build_agentic_mep(const Trajectory& t, const FlagVector& flags, bool replay_ok,
                                    const std::vector<IntegrityViolation>& integrity,
                                    std::optional<std::vector<std::int64_t>> focus_steps) {
  if (flags.run_id != t.run_id) {
    throw InvariantViolation("flags for run '" + flags.run_id + "' do not belong to run '" +
                             t.run_id + "'");
  }
  TrajectoryContext ctx;
  ctx.run_id = t.run_id;
  ctx.task_id = t.task_id;
  ctx.benchmark = t.benchmark;
  ctx.trace_digest = sha256_hex(serialize_trajectory(t));
  TraceAccount account;
  std::vector<std::int64_t> error_steps;
  for (const auto& s : t.steps) {
    StepDigest d;
    d.step = s.index;
    d.action_kind = std::string(to_string(s.action.kind));
    d.tool_name = s.action.tool_name;
    d.step_digest = sha256_hex(step_to_json(s).dump());
    d.state_digest = sha256_hex(s.state.dump());
    ctx.steps.push_back(std::move(d));

    TraceAccountEntry e;
    e.step = s.index;
    e.reasoning = s.action.rationale.value_or("");
    if (s.action.kind == ActionKind::kToolCall) {
      e.action = "call " + s.action.tool_name +
                 (s.action.arguments ? s.action.arguments->dump() : std::string("{}"));
    } else {
      e.action = "message " + s.action.content.value_or("");
    }
    if (s.observation) {
      e.observation = std::string(to_string(s.observation->kind));
      if (s.observation->is_error) {
        e.observation += " error";
        error_steps.push_back(s.index);
      }
      if (s.observation->payload) e.observation += " " + s.observation->payload->dump();
    }
    e.action = clip(std::move(e.action));
    e.observation = clip(std::move(e.observation));
    e.reasoning = clip(std::move(e.reasoning));
    account.entries.push_back(std::move(e));
  }
  account.focus_steps = focus_steps.value_or(error_steps);
  for (auto f : account.focus_steps) {
    const bool found = std::any_of(t.steps.begin(), t.steps.end(),
                                   [&](const Step& s) { return s.index == f; });
    if (!found) throw DanglingStepReference(f);
  }

  ExplanationPacket p;
  p.scope = Scope::kLocal;
  p.paradigm = Paradigm::kAgentic;
  p.artifact = std::move(account);
  p.context = std::move(ctx);
  p.verification.push_back({SignalKind::kRubricFlags, flags});
  p.verification.push_back({SignalKind::kReplayConsistent, replay_ok});
  p.verification.push_back({SignalKind::kTraceIntegrity, integrity});
  validate(p);
  return p;
}

// ---- serialization ----

namespace {

template <class T>
void put_opt(OJson& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}

OJson artifact_json(const Artifact& a) {
  OJson j;
  if (const auto* s = std::get_if<AttributionScores>(&a)) {
    j["type"] = "attribution_scores";
    j["base_value"] = s->base_value;
    j["features"] = OJson::array();
    for (const auto& f : s->features) {
      j["features"].push_back(OJson{{"name", f.name}, {"index", f.index}, {"score", f.score}});
    }
    if (s->pdp) {
      OJson pdp;
      pdp["feature"] = s->pdp->feature;
      pdp["curve"] = OJson::array();
      for (const auto& pt : s->pdp->curve) {
        pdp["curve"].push_back(OJson::array({pt.value, pt.mean_prediction}));
      }
      j["pdp"] = std::move(pdp);
    }
  } else {
    const auto& t = std::get<TraceAccount>(a);
    j["type"] = "trace_account";
    j["entries"] = OJson::array();
    for (const auto& e : t.entries) {
      j["entries"].push_back(OJson{{"step", e.step},
                                   {"reasoning", e.reasoning},
                                   {"action", e.action},
                                   {"observation", e.observation}});
    }
    j["focus_steps"] = t.focus_steps;
  }
  return j;
}

OJson context_json(const Context& c) {
  OJson j;
  if (const auto* s = std::get_if<InstanceContext>(&c)) {
    j["type"] = "instance_context";
    j["model_digest"] = s->model_digest;
    put_opt(j, "input_text", s->input_text);
    put_opt(j, "predicted_label", s->predicted_label);
    put_opt(j, "confidence", s->confidence);
    put_opt(j, "corpus_digest", s->corpus_digest);
    put_opt(j, "n_instances", s->n_instances);
  } else {
    const auto& t = std::get<TrajectoryContext>(c);
    j["type"] = "trajectory_context";
    j["run_id"] = t.run_id;
    j["task_id"] = t.task_id;
    j["benchmark"] = t.benchmark;
    j["trace_digest"] = t.trace_digest;
    j["steps"] = OJson::array();
    for (const auto& d : t.steps) {
      j["steps"].push_back(OJson{{"step", d.step},
                                 {"action_kind", d.action_kind},
                                 {"tool_name", d.tool_name},
                                 {"step_digest", d.step_digest},
                                 {"state_digest", d.state_digest}});
    }
  }
  return j;
}

OJson signal_json(const VerificationSignal& s) {
  OJson j;
  j["kind"] = std::string(to_string(s.kind));
  std::visit(
      [&](const auto& v) {
        using V = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<V, FlagVector>) {
          j["value"] = flags_to_json(v);
        } else if constexpr (std::is_same_v<V, std::vector<IntegrityViolation>>) {
          j["value"] = OJson::array();
          for (const auto& iv : v) j["value"].push_back(OJson{{"rule_id", iv.rule_id}, {"step", iv.step}});
        } else {
          j["value"] = v;
        }
      },
      s.value);
  return j;
}

void require_keys(const Json& j, std::initializer_list<const char*> required,
                  std::initializer_list<const char*> optional, const char* what) {
  if (!j.is_object()) throw MalformedPacket(std::string(what) + " must be an object");
  for (const char* k : required) {
    if (!j.contains(k)) throw MalformedPacket(std::string(what) + " lacks '" + k + "'");
  }
  for (const auto& [k, _] : j.items()) {
    const bool known =
        std::any_of(required.begin(), required.end(), [&](const char* r) { return k == r; }) ||
        std::any_of(optional.begin(), optional.end(), [&](const char* r) { return k == r; });
    if (!known) throw MalformedPacket(std::string(what) + " has unknown key '" + k + "'");
  }
}

Artifact artifact_from(const Json& j) {
  if (!j.is_object() || !j.contains("type")) throw MalformedPacket("artifact lacks a type");
  const auto type = j.at("type").get<std::string>();
  if (type == "attribution_scores") {
    require_keys(j, {"type", "base_value", "features"}, {"pdp"}, "artifact");
    AttributionScores s;
    s.base_value = j.at("base_value").get<double>();
    for (const auto& f : j.at("features")) {
      require_keys(f, {"name", "index", "score"}, {}, "feature");
      s.features.push_back({f.at("name").get<std::string>(), f.at("index").get<std::int64_t>(),
                            f.at("score").get<double>()});
    }
    if (j.contains("pdp")) {
      const auto& pj = j.at("pdp");
      require_keys(pj, {"feature", "curve"}, {}, "pdp");
      PdpReference pdp;
      pdp.feature = pj.at("feature").get<std::string>();
      for (const auto& pt : pj.at("curve")) {
        if (!pt.is_array() || pt.size() != 2) throw MalformedPacket("pdp point must be a pair");
        pdp.curve.push_back({pt.at(0).get<double>(), pt.at(1).get<double>()});
      }
      s.pdp = std::move(pdp);
    }
    return s;
  }
  if (type == "trace_account") {
    require_keys(j, {"type", "entries", "focus_steps"}, {}, "artifact");
    TraceAccount t;
    for (const auto& e : j.at("entries")) {
      require_keys(e, {"step", "reasoning", "action", "observation"}, {}, "trace entry");
      t.entries.push_back({e.at("step").get<std::int64_t>(), e.at("reasoning").get<std::string>(),
                           e.at("action").get<std::string>(),
                           e.at("observation").get<std::string>()});
    }
    t.focus_steps = j.at("focus_steps").get<std::vector<std::int64_t>>();
    return t;
  }
  throw MalformedPacket("unknown artifact type '" + type + "'");
}

Context context_from(const Json& j) {
  if (!j.is_object() || !j.contains("type")) throw MalformedPacket("context lacks a type");
  const auto type = j.at("type").get<std::string>();
  if (type == "instance_context") {
    require_keys(j, {"type", "model_digest"},
                 {"input_text", "predicted_label", "confidence", "corpus_digest", "n_instances"},
                 "context");
    InstanceContext c;
    c.model_digest = j.at("model_digest").get<std::string>();
    if (j.contains("input_text")) c.input_text = j.at("input_text").get<std::string>();
    if (j.contains("predicted_label")) c.predicted_label = j.at("predicted_label").get<int>();
    if (j.contains("confidence")) c.confidence = j.at("confidence").get<double>();
    if (j.contains("corpus_digest")) c.corpus_digest = j.at("corpus_digest").get<std::string>();
    if (j.contains("n_instances")) c.n_instances = j.at("n_instances").get<std::int64_t>();
    return c;
  }
  if (type == "trajectory_context") {
    require_keys(j, {"type", "run_id", "task_id", "benchmark", "trace_digest", "steps"}, {},
                 "context");
    TrajectoryContext c;
    c.run_id = j.at("run_id").get<std::string>();
    c.task_id = j.at("task_id").get<std::string>();
    c.benchmark = j.at("benchmark").get<std::string>();
    c.trace_digest = j.at("trace_digest").get<std::string>();
    for (const auto& d : j.at("steps")) {
      require_keys(d, {"step", "action_kind", "tool_name", "step_digest", "state_digest"}, {},
                   "step digest");
      c.steps.push_back({d.at("step").get<std::int64_t>(), d.at("action_kind").get<std::string>(),
                         d.at("tool_name").get<std::string>(),
                         d.at("step_digest").get<std::string>(),
                         d.at("state_digest").get<std::string>()});
    }
    return c;
  }
  throw MalformedPacket("unknown context type '" + type + "'");
}

VerificationSignal signal_from(const Json& j) {
  require_keys(j, {"kind", "value"}, {}, "verification signal");
  const auto kind = j.at("kind").get<std::string>();
  const auto& v = j.at("value");
  if (kind == "stability_rho") {
    if (!v.is_number()) throw MalformedPacket("stability_rho must be a number");
    return {SignalKind::kStabilityRho, v.get<double>()};
  }
  if (kind == "rubric_flags") return {SignalKind::kRubricFlags, flags_from_json(v)};
  if (kind == "replay_consistent") {
    if (!v.is_boolean()) throw MalformedPacket("replay_consistent must be a boolean");
    return {SignalKind::kReplayConsistent, v.get<bool>()};
  }
  if (kind == "trace_integrity") {
    std::vector<IntegrityViolation> out;
    for (const auto& iv : v) {
      require_keys(iv, {"rule_id", "step"}, {}, "integrity violation");
      out.push_back({iv.at("rule_id").get<std::string>(), iv.at("step").get<std::int64_t>()});
    }
    return {SignalKind::kTraceIntegrity, std::move(out)};
  }
  throw MalformedPacket("unknown signal kind '" + kind + "'");
}

}  // namespace

OJson to_json(const ExplanationPacket& p) {
  OJson j;
  j["v"] = p.version;
  j["scope"] = std::string(xai::to_string(p.scope));
  j["paradigm"] = std::string(to_string(p.paradigm));
  j["artifact"] = artifact_json(p.artifact);
  j["context"] = context_json(p.context);
  j["verification"] = OJson::array();
  for (const auto& s : p.verification) j["verification"].push_back(signal_json(s));
  return j;
}

std::string serialize(const ExplanationPacket& p) { return to_json(p).dump(); }

ExplanationPacket deserialize(std::string_view bytes) {
  Json j;
  try {
    j = Json::parse(bytes);
  } catch (const nlohmann::json::exception& e) {
    throw MalformedPacket(std::string("packet is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("v")) throw MalformedPacket("packet lacks a version");
  if (!j.at("v").is_number_integer() || j.at("v").get<std::int64_t>() != kPacketVersion) {
    throw SchemaVersionMismatch("packet version " + j.at("v").dump() + " is not supported");
  }
  try {
    require_keys(j, {"v", "scope", "paradigm", "artifact", "context", "verification"}, {},
                 "packet");
    ExplanationPacket p;
    const auto scope = j.at("scope").get<std::string>();
    if (scope == "local") {
      p.scope = Scope::kLocal;
    } else if (scope == "global") {
      p.scope = Scope::kGlobal;
    } else {
      throw MalformedPacket("unknown scope '" + scope + "'");
    }
    const auto paradigm = j.at("paradigm").get<std::string>();
    if (paradigm == "static") {
      p.paradigm = Paradigm::kStatic;
    } else if (paradigm == "agentic") {
      p.paradigm = Paradigm::kAgentic;
    } else {
      throw MalformedPacket("unknown paradigm '" + paradigm + "'");
    }
    p.artifact = artifact_from(j.at("artifact"));
    p.context = context_from(j.at("context"));
    if (!j.at("verification").is_array()) throw MalformedPacket("verification must be an array");
    for (const auto& s : j.at("verification")) p.verification.push_back(signal_from(s));
    validate(p);
    return p;
  } catch (const MalformedPacket&) {
    throw;
  } catch (const nlohmann::json::exception& e) {
    throw MalformedPacket(std::string("packet field has the wrong type: ") + e.what());
  } catch (const DataError& e) {
    throw MalformedPacket(e.what());
  }
}

}  // namespace tracexp::mep
