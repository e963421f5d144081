#include "tracexp/synth_env.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include "toml.hpp"
#include "tracexp/errors.hpp"
#include "tracexp/rng.hpp"
#include "tracexp/trace_conventions.hpp"

namespace tracexp::synth {

namespace conv = tracexp::conventions;

namespace {

struct Operation {
  const char* op;
  const char* tool;
};

constexpr std::array<Operation, 10> kOperations = {{
    {"lookup_user", "get_user_details"},
    {"search_flights", "search_direct_flight"},
    {"get_reservation", "get_reservation_details"},
    {"check_policy", "get_policy"},
    {"book", "book_reservation"},
    {"cancel", "cancel_reservation"},
    {"update", "update_reservation_flights"},
    {"refund", "issue_refund"},
    {"calculate", "calculate"},
    {"notify", "send_confirmation"},
}};

struct Intent {
  const char* id;
  const char* request;
};

constexpr std::array<Intent, 5> kIntents = {{
    {"book_flight", "I need to book a one-way flight for next Tuesday."},
    {"cancel_reservation", "Please cancel my reservation and tell me about the refund."},
    {"change_flight", "Can you move my flight to an earlier departure?"},
    {"update_baggage", "I want to add two checked bags to my booking."},
    {"request_refund", "My flight was delayed; I would like compensation."},
}};

constexpr double kCleanTransientErrorRate = 0.15;
constexpr std::uint64_t kRunStreamSalt = 0x7472616365787031ULL;  // "tracexp1"

constexpr std::size_t kNone = static_cast<std::size_t>(-1);

// One tool call in a run's execution plan.
struct Call {
  std::size_t subtask = 0;  // plan index
  const char* error_code = nullptr;
  bool wrong_tool = false;
  bool wrong_intent = false;
};

std::string hex_token(Rng& rng, const char* prefix) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out = prefix;
  std::uint64_t bits = rng.next_u64();
  for (int i = 0; i < 6; ++i) out.push_back(kHex[(bits >> (4 * i)) & 0xF]);
  return out;
}

double round_to(double x, double scale) { return std::round(x * scale) / scale; }

bool flagged(const RunTruth& truth, RubricId id) { return truth.flags[rubric_index(id)] != 0; }

}  // namespace

double OutcomeModel::success_probability(
    const std::array<std::uint8_t, kNumRubrics>& flags) const {
  double logit = bias;
  for (std::size_t r = 0; r < kNumRubrics; ++r) logit += weights[r] * flags[r];
  return 1.0 / (1.0 + std::exp(-logit));
}

const RunTruth& GroundTruth::at(const std::string& run_id) const {
  auto it = std::find(run_ids.begin(), run_ids.end(), run_id);
  if (it == run_ids.end()) throw MissingOutcome(run_id);
  return runs[static_cast<std::size_t>(it - run_ids.begin())];
}

void validate(const FaultSpec& faults, const OutcomeModel& outcome) {
  for (RubricId id : kCanonicalRubrics) {
    const double p = faults[id];
    if (!(p >= 0.0 && p <= 1.0)) {
      throw InvalidFaultSpec("injection probability for " + std::string(rubric_key(id)) +
                             " outside [0,1]");
    }
  }
  if (!std::isfinite(outcome.bias)) throw InvalidFaultSpec("outcome bias is not finite");
  for (double w : outcome.weights) {
    if (!std::isfinite(w)) throw InvalidFaultSpec("outcome weight is not finite");
  }
}

std::string run_id_for(std::uint64_t seed, std::size_t ordinal) {
  std::string idx = std::to_string(ordinal);
  if (idx.size() < 6) idx.insert(0, 6 - idx.size(), '0');
  return "synth-" + std::to_string(seed) + "-" + idx;
}

std::pair<Trajectory, RunTruth> generate_run(std::uint64_t seed, const FaultSpec& faults,
                                             const OutcomeModel& outcome,
                                             std::size_t ordinal) {
  Rng rng(derive_stream_seed(seed, kRunStreamSalt ^ splitmix64(faults.seed), ordinal));

  // Ground truth first, so the outcome draw does not depend on trace layout.
  RunTruth truth;
  for (RubricId id : kCanonicalRubrics) {
    truth.flags[rubric_index(id)] = rng.uniform() < faults[id] ? 1 : 0;
  }
  truth.success = rng.uniform() < outcome.success_probability(truth.flags);

  const auto n_steps = static_cast<std::size_t>(
      rng.uniform_int(static_cast<std::int64_t>(kMinSteps), static_cast<std::int64_t>(kMaxSteps)));
  const std::size_t n_calls = n_steps - 2;  // opening and closing messages
  const bool clean_transient = rng.uniform() < kCleanTransientErrorRate;
  const std::size_t retries =
      (flagged(truth, RubricId::kToolCorrectness) ? 1 : 0) + (clean_transient ? 1 : 0);
  const std::size_t plan_len = n_calls - retries;  // >= 2

  const Intent& intent = kIntents[rng.index(kIntents.size())];
  std::vector<std::size_t> plan_ops(plan_len);
  for (auto& op : plan_ops) op = rng.index(kOperations.size());

  std::vector<std::size_t> order(plan_len);
  for (std::size_t i = 0; i < plan_len; ++i) order[i] = i;
  if (flagged(truth, RubricId::kPlanAdherence)) {
    std::size_t k = rng.index(plan_len - 1);
    std::swap(order[k], order[k + 1]);
  }

  const std::size_t abandon_at =
      flagged(truth, RubricId::kErrorRecovery) ? rng.index(plan_len) : kNone;
  std::vector<std::size_t> recoverable;
  for (std::size_t pos = 0; pos < plan_len; ++pos) {
    if (pos != abandon_at) recoverable.push_back(pos);
  }
  const std::size_t invalid_at = flagged(truth, RubricId::kToolCorrectness)
                                     ? recoverable[rng.index(recoverable.size())]
                                     : kNone;
  const std::size_t transient_at =
      clean_transient ? recoverable[rng.index(recoverable.size())] : kNone;

  std::vector<Call> calls;
  for (std::size_t pos = 0; pos < plan_len; ++pos) {
    const std::size_t subtask = order[pos];
    if (pos == abandon_at) {
      calls.push_back({subtask, conv::kTimeout});
      continue;
    }
    if (pos == invalid_at) calls.push_back({subtask, conv::kInvalidArguments});
    if (pos == transient_at) calls.push_back({subtask, conv::kTimeout});
    calls.push_back({subtask, nullptr});
  }
  if (flagged(truth, RubricId::kToolChoiceAccuracy)) calls[rng.index(calls.size())].wrong_tool = true;
  if (flagged(truth, RubricId::kIntentAlignment)) calls[rng.index(calls.size())].wrong_intent = true;

  Json base = Json::object();
  base[conv::kUserRequest] = {{conv::kIntent, intent.id}, {"text", intent.request}};
  Json plan = Json::array();
  for (std::size_t i = 0; i < plan_len; ++i) {
    plan.push_back({{conv::kPlanItemId, "t" + std::to_string(i + 1)},
                    {conv::kPlanItemOp, kOperations[plan_ops[i]].op}});
  }
  base[conv::kPlan] = plan;
  Json catalog = Json::object();
  for (const auto& op : kOperations) catalog[op.op] = op.tool;
  base[conv::kToolCatalog] = catalog;

  Trajectory t;
  t.run_id = run_id_for(seed, ordinal);
  t.task_id = "synth-task-" + std::to_string(rng.uniform_int(0, 199));
  t.benchmark = "synthetic-airline";

  Json known = Json::object();
  auto state_now = [&] {
    Json s = base;
    s[conv::kKnown] = known;
    return s;
  };

  Step opening;
  opening.index = 0;
  opening.state = state_now();
  opening.action.kind = ActionKind::kMessage;
  opening.action.content = "Happy to help. Let me look into that for you.";
  opening.observation = Observation{ObservationKind::kEnvFeedback,
                                    Json{{"user_message", intent.request}}, false};
  t.steps.push_back(std::move(opening));

  std::size_t first_fact_step = kNone;
  for (const Call& call : calls) {
    const std::size_t op_idx = plan_ops[call.subtask];
    const Operation& op = kOperations[op_idx];
    const std::string subtask_id = "t" + std::to_string(call.subtask + 1);

    Step s;
    s.index = static_cast<std::int64_t>(t.steps.size());
    s.state = state_now();
    s.action.kind = ActionKind::kToolCall;
    s.action.tool_name = op.tool;
    if (call.wrong_tool) {
      std::size_t other = rng.index(kOperations.size() - 1);
      if (other >= op_idx) ++other;
      s.action.tool_name = kOperations[other].tool;
    }
    std::string claimed_intent = intent.id;
    if (call.wrong_intent) {
      const std::size_t own = static_cast<std::size_t>(&intent - kIntents.data());
      std::size_t other = rng.index(kIntents.size() - 1);
      if (other >= own) ++other;
      claimed_intent = kIntents[other].id;
    }
    Json params = Json::object();
    if (call.error_code != conv::kInvalidArguments) params["ref"] = hex_token(rng, "R");
    s.action.arguments = Json{{conv::kIntent, claimed_intent},
                              {conv::kSubtask, subtask_id},
                              {conv::kParams, params}};
    s.action.rationale = "Working on " + subtask_id + " (" + op.op + ").";

    Observation obs;
    obs.kind = ObservationKind::kToolResult;
    if (call.error_code != nullptr) {
      obs.is_error = true;
      obs.payload = Json{{conv::kErrorCode, call.error_code},
                         {"message", call.error_code == conv::kTimeout
                                         ? "upstream service timed out"
                                         : "missing required parameter `ref`"}};
    } else {
      const std::string key = subtask_id + "." + op.op;
      const std::string value = hex_token(rng, "v");
      obs.payload = Json{{conv::kFacts, Json{{key, value}}}};
      known[key] = value;
      if (first_fact_step == kNone) first_fact_step = t.steps.size();
    }
    s.observation = std::move(obs);
    t.steps.push_back(std::move(s));
  }

  Step closing;
  closing.index = static_cast<std::int64_t>(t.steps.size());
  closing.state = state_now();
  closing.action.kind = ActionKind::kMessage;
  closing.action.content = "I have finished working on your request.";
  t.steps.push_back(std::move(closing));

  if (flagged(truth, RubricId::kStateTrackingConsistency)) {
    // Corrupt a previously learned fact from some later step onward.
    const std::size_t from = first_fact_step + 1 + rng.index(t.steps.size() - first_fact_step - 1);
    const Json& facts = t.steps[from].state[conv::kKnown];
    auto it = facts.begin();
    std::advance(it, static_cast<std::ptrdiff_t>(rng.index(facts.size())));
    const std::string key = it.key();
    for (std::size_t i = from; i < t.steps.size(); ++i) {
      t.steps[i].state[conv::kKnown][key] = "stale";
    }
  }

  t.meta = Json{{"model", "synthetic-agent-v1"},
                {"cost", round_to(rng.uniform(0.01, 0.5), 1e4)},
                {"wall_time_s", round_to(rng.uniform(5.0, 120.0), 1e2)},
                {"replay", Json{{"seed", seed}, {"fault_seed", faults.seed}, {"ordinal", ordinal}}}};
  t.outcome.success = truth.success;
  return {std::move(t), truth};
}

Corpus generate_corpus(std::size_t n_runs, const FaultSpec& faults,
                       const OutcomeModel& outcome, std::uint64_t seed) {
  if (n_runs == 0) throw InvalidFaultSpec("n_runs must be positive");
  validate(faults, outcome);

  Corpus corpus;
  corpus.trajectories.resize(n_runs);
  corpus.truth.runs.resize(n_runs);
  corpus.truth.run_ids.resize(n_runs);

  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      auto [t, truth] = generate_run(seed, faults, outcome, i);
      corpus.truth.run_ids[i] = t.run_id;
      corpus.truth.runs[i] = truth;
      corpus.trajectories[i] = std::move(t);
    }
  };

  const std::size_t n_threads =
      n_runs < 512 ? 1 : std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, 8);
  if (n_threads == 1) {
    work(0, n_runs);
  } else {
    std::vector<std::jthread> workers;
    const std::size_t chunk = (n_runs + n_threads - 1) / n_threads;
    for (std::size_t begin = 0; begin < n_runs; begin += chunk) {
      workers.emplace_back(work, begin, std::min(n_runs, begin + chunk));
    }
  }
  return corpus;
}

Trajectory replay(const ReplayConfig& cfg) {
  if (cfg.ordinal >= cfg.n_runs) {
    throw OrdinalOutOfRange("ordinal " + std::to_string(cfg.ordinal) + " >= n_runs " +
                            std::to_string(cfg.n_runs));
  }
  validate(cfg.faults, cfg.outcome);
  return generate_run(cfg.seed, cfg.faults, cfg.outcome, cfg.ordinal).first;
}

// --- config and sidecar files -------------------------------------------------

namespace {

double toml_number(const toml::node& node, const std::string& where) {
  if (auto v = node.value<double>()) return *v;
  throw InvalidFaultSpec(where + " must be a number");
}

std::uint64_t toml_seed(const toml::node& node, const std::string& where) {
  auto v = node.value<std::int64_t>();
  if (!v || *v < 0) throw InvalidFaultSpec(where + " must be a non-negative integer");
  return static_cast<std::uint64_t>(*v);
}

void read_rubric_table(const toml::table& table, const std::string& where,
                       std::array<double, kNumRubrics>& out,
                       std::initializer_list<std::string_view> extra_keys) {
  for (const auto& [key, node] : table) {
    const std::string_view k = key.str();
    if (std::find(extra_keys.begin(), extra_keys.end(), k) != extra_keys.end()) continue;
    auto id = parse_rubric_key(k);
    if (!id) throw InvalidFaultSpec("unknown rubric `" + std::string(k) + "` in [" + where + "]");
    out[rubric_index(*id)] = toml_number(node, where + "." + std::string(k));
  }
}

}  // namespace

SynthConfig parse_synth_config(std::string_view toml_text, SynthConfig base) {
  toml::table root;
  try {
    root = toml::parse(toml_text);
  } catch (const toml::parse_error& e) {
    throw InvalidFaultSpec(std::string("config: ") + std::string(e.description()));
  }
  SynthConfig cfg = std::move(base);
  if (auto* n = root.get("seed")) cfg.seed = toml_seed(*n, "seed");
  if (auto* n = root.get("runs")) {
    auto v = n->value<std::int64_t>();
    if (!v || *v < 1) throw InvalidFaultSpec("runs must be a positive integer");
    cfg.n_runs = static_cast<std::size_t>(*v);
  }
  if (auto* faults = root["faults"].as_table()) {
    read_rubric_table(*faults, "faults", cfg.faults.probability, {"seed"});
    if (auto* n = faults->get("seed")) cfg.faults.seed = toml_seed(*n, "faults.seed");
  }
  if (auto* outcome = root["outcome"].as_table()) {
    if (auto* n = outcome->get("bias")) cfg.outcome.bias = toml_number(*n, "outcome.bias");
    if (auto* weights = (*outcome)["weights"].as_table()) {
      read_rubric_table(*weights, "outcome.weights", cfg.outcome.weights, {});
    }
  }
  validate(cfg.faults, cfg.outcome);
  return cfg;
}

SynthConfig load_synth_config(const std::filesystem::path& path, SynthConfig base) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_synth_config(text.str(), std::move(base));
}

void write_ground_truth(std::ostream& out, const GroundTruth& truth) {
  for (std::size_t i = 0; i < truth.runs.size(); ++i) {
    nlohmann::ordered_json line;
    line["run_id"] = truth.run_ids[i];
    nlohmann::ordered_json flags;
    for (RubricId id : kCanonicalRubrics) {
      flags[std::string(rubric_key(id))] = truth.runs[i].flags[rubric_index(id)];
    }
    line["flags"] = flags;
    line["success"] = truth.runs[i].success;
    out << line.dump() << '\n';
  }
}

GroundTruth read_ground_truth(std::istream& in) {
  GroundTruth truth;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      Json j = Json::parse(line);
      RunTruth run;
      for (RubricId id : kCanonicalRubrics) {
        const int v = j.at("flags").at(std::string(rubric_key(id))).get<int>();
        if (v != 0 && v != 1) throw MalformedRecord(line_no, "flag values must be 0 or 1");
        run.flags[rubric_index(id)] = static_cast<std::uint8_t>(v);
      }
      run.success = j.at("success").get<bool>();
      truth.run_ids.push_back(j.at("run_id").get<std::string>());
      truth.runs.push_back(run);
    } catch (const nlohmann::json::exception& e) {
      throw MalformedRecord(line_no, e.what());
    }
  }
  return truth;
}

}  // namespace tracexp::synth
