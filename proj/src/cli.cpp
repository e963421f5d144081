#include "tracexp/cli.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "cli_support.hpp"
#include "tracexp/bridge.hpp"
#include "tracexp/digest.hpp"
#include "tracexp/errors.hpp"
#include "tracexp/llm_judge.hpp"
#include "tracexp/mep.hpp"
#include "tracexp/outcome_stats.hpp"
#include "tracexp/report.hpp"
#include "tracexp/rng.hpp"
#include "tracexp/rubric_judge.hpp"
#include "tracexp/static_xai/io.hpp"
#include "tracexp/static_xai/lime.hpp"
#include "tracexp/static_xai/linear_shap.hpp"
#include "tracexp/static_xai/pdp.hpp"
#include "tracexp/static_xai/stability.hpp"
#include "tracexp/synth_env.hpp"
#include "tracexp/trace_model.hpp"

namespace tracexp::cli {

namespace fs = std::filesystem;

namespace {

// --- shared helpers ---

synth::SynthConfig default_synth_config() {
  synth::SynthConfig c;
  c.seed = 0;
  c.n_runs = 100;
  c.faults.probability = {0.30, 0.20, 0.35, 0.25, 0.30, 0.40};
  c.faults.seed = 0;
  c.outcome.bias = 1.5;
  c.outcome.weights = {-1.2, -0.4, -0.8, -0.6, -1.6, -0.3};
  return c;
}

OJson rubric_object(const std::array<double, kNumRubrics>& values) {
  OJson j = OJson::object();
  for (RubricId id : kCanonicalRubrics) j[std::string(rubric_key(id))] = values[rubric_index(id)];
  return j;
}

std::vector<Trajectory> load_corpus(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  return parse_trace_corpus(in);
}

std::vector<FlagVector> load_flags(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  return read_flags(in);
}

FlagMatrix load_matrix(const std::vector<Trajectory>& corpus, const std::vector<FlagVector>& flags) {
  FlagMatrix m = aggregate(flags, outcomes_of(corpus));
  if (m.size() != corpus.size()) {
    throw CorpusMismatch(fmt::format("flags cover {} of {} runs", m.size(), corpus.size()));
  }
  return m;
}

std::vector<ReportFormat> formats_for(const std::string& spec) {
  if (spec == "all") return {ReportFormat::kMarkdown, ReportFormat::kCsv, ReportFormat::kJson};
  return {parse_report_format(spec)};
}

void write_tables(Manifest& manifest, const fs::path& out_dir, const std::string& stem,
                  const std::vector<Table>& tables, const std::string& format_spec) {
  for (ReportFormat f : formats_for(format_spec)) {
    const std::string name = stem + "." + std::string(extension(f));
    write_file(out_dir / name, render_report(tables, f));
    manifest.add_output(name);
  }
}

RubricSet parse_rubric_list(const std::string& spec) {
  if (spec == "all") return all_rubrics();
  RubricSet out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto id = parse_rubric_key(item);
    if (!id) throw CLI::ValidationError("unknown rubric '" + item + "'");
    out.insert(*id);
  }
  if (out.empty()) throw CLI::ValidationError("no rubrics selected");
  return out;
}

void check_format(const std::string& f) {
  if (f != "all" && f != "markdown" && f != "md" && f != "csv" && f != "json") {
    throw CLI::ValidationError("--format must be one of all, markdown, csv, json");
  }
}

// --- synth ---

struct SynthCmd {
  CLI::App* app = nullptr;
  std::string out, config;
  std::uint64_t seed = 0;
  std::int64_t runs = 0;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* runs_opt = nullptr;

  void setup(CLI::App& root) {
    app = root.add_subcommand("synth", "Generate a synthetic trajectory corpus with ground truth");
    app->add_option("--out", out, "Output directory")->required();
    app->add_option("--config", config, "TOML file with seed, runs, [faults], [outcome]");
    seed_opt = app->add_option("--seed", seed, "Generator seed");
    runs_opt = app->add_option("--runs", runs, "Number of runs")->check(CLI::PositiveNumber);
  }

  void run(const std::vector<std::string>& argv, std::ostream& out_s, std::ostream& err) {
    std::vector<fs::path> inputs;
    if (!config.empty()) inputs.emplace_back(config);
    prepare_paths(inputs, out);
    synth::SynthConfig cfg = default_synth_config();
    std::optional<toml::table> root;
    if (!config.empty()) {
      root = load_toml(config);
      cfg = synth::parse_synth_config(read_file(config), cfg);
    }
    Settings s("synth", root);
    cfg.seed = s.get<std::uint64_t>("seed", seed_opt, seed, cfg.seed);
    cfg.n_runs = static_cast<std::size_t>(
        s.get<std::int64_t>("runs", runs_opt, runs, static_cast<std::int64_t>(cfg.n_runs)));
    const std::string fsrc = root && root->contains("faults") ? "config" : "default";
    const std::string osrc = root && root->contains("outcome") ? "config" : "default";
    OJson faults = rubric_object(cfg.faults.probability);
    faults["seed"] = cfg.faults.seed;
    s.record("faults", faults, fsrc);
    s.record("outcome",
             OJson{{"bias", cfg.outcome.bias}, {"weights", rubric_object(cfg.outcome.weights)}},
             osrc);
    s.reject_unknown({"faults", "outcome"});
    s.print(err);

    const synth::Corpus corpus =
        synth::generate_corpus(cfg.n_runs, cfg.faults, cfg.outcome, cfg.seed);
    Manifest manifest("synth", argv, out);
    if (!config.empty()) manifest.add_input(config);
    {
      std::ostringstream c;
      write_trace_corpus(c, corpus.trajectories);
      write_file(fs::path(out) / "corpus.jsonl", c.str());
      std::ostringstream g;
      synth::write_ground_truth(g, corpus.truth);
      write_file(fs::path(out) / "ground_truth.jsonl", g.str());
    }
    manifest.add_output("corpus.jsonl");
    manifest.add_output("ground_truth.jsonl");
    manifest.set_seed(cfg.seed);
    manifest.set_config(s.to_json());
    manifest.write();
    out_s << fmt::format("wrote {} runs to {}\n", corpus.trajectories.size(), out);
  }
};

// --- judge ---

struct JudgeCmd {
  CLI::App* app = nullptr;
  std::string traces, out, config;
  std::string mode, rubrics, endpoint, model, api_key;
  double temperature = 0.0, timeout_s = 0.0;
  int max_in_flight = 0, retry_budget = 0;
  CLI::Option *mode_opt{}, *rubrics_opt{}, *endpoint_opt{}, *model_opt{}, *key_opt{}, *temp_opt{},
      *timeout_opt{}, *inflight_opt{}, *retry_opt{};

  void setup(CLI::App& root) {
    app = root.add_subcommand("judge", "Flag rubric violations per run (rules or LLM judge)");
    app->add_option("--traces", traces, "Trace corpus (.jsonl)")->required();
    app->add_option("--out", out, "Output directory")->required();
    app->add_option("--config", config, "TOML file; reads the [judge] table");
    mode_opt = app->add_option("--mode", mode, "rules or llm")
                   ->check(CLI::IsMember({"rules", "llm"}));
    rubrics_opt = app->add_option("--rubrics", rubrics, "Comma-separated rubric ids or 'all'");
    endpoint_opt = app->add_option("--endpoint", endpoint, "Chat-completions URL (llm mode)");
    model_opt = app->add_option("--model", model, "Judge model name");
    key_opt = app->add_option("--api-key", api_key, "Bearer token (prefer JUDGE_API_KEY)");
    temp_opt = app->add_option("--temperature", temperature)->check(CLI::NonNegativeNumber);
    timeout_opt = app->add_option("--timeout", timeout_s, "Seconds")->check(CLI::PositiveNumber);
    inflight_opt = app->add_option("--max-in-flight", max_in_flight)->check(CLI::PositiveNumber);
    retry_opt = app->add_option("--retry-budget", retry_budget)->check(CLI::NonNegativeNumber);
  }

  void run(const std::vector<std::string>& argv, std::ostream& out_s, std::ostream& err) {
    std::vector<fs::path> inputs{traces};
    if (!config.empty()) inputs.emplace_back(config);
    prepare_paths(inputs, out);
    Settings s("judge", load_section(config, "judge"));
    const std::string m = s.get<std::string>("mode", mode_opt, mode, "rules");
    if (m != "rules" && m != "llm") throw CLI::ValidationError("mode must be rules or llm");
    const RubricSet set = parse_rubric_list(s.get<std::string>("rubrics", rubrics_opt, rubrics, "all"));

    JudgeConfig jc;
    if (m == "llm") {
      jc.endpoint = s.get<std::string>("endpoint", endpoint_opt, endpoint, "", "JUDGE_ENDPOINT");
      jc.model = s.get<std::string>("model", model_opt, model, jc.model, "JUDGE_MODEL");
      jc.api_key = s.get<std::string>("api_key", key_opt, api_key, "", "JUDGE_API_KEY", true);
      jc.temperature = s.get<double>("temperature", temp_opt, temperature, jc.temperature);
      jc.timeout_s = s.get<double>("timeout_s", timeout_opt, timeout_s, jc.timeout_s);
      jc.max_in_flight = s.get<int>("max_in_flight", inflight_opt, max_in_flight, jc.max_in_flight);
      jc.retry_budget = s.get<int>("retry_budget", retry_opt, retry_budget, jc.retry_budget);
      if (jc.endpoint.empty()) {
        s.print(err);
        throw CLI::ValidationError("llm mode needs --endpoint, [judge].endpoint or JUDGE_ENDPOINT");
      }
      jc.audit_log = fs::path(out) / "audit.jsonl";
      jc.validate();
      s.reject_unknown();
    } else {
      s.reject_unknown({"endpoint", "model", "api_key", "temperature", "timeout_s",
                        "max_in_flight", "retry_budget"});
    }
    s.print(err);

    const auto corpus = load_corpus(traces);
    std::size_t with_violations = 0;
    for (const auto& t : corpus) with_violations += validate_trajectory(t).empty() ? 0 : 1;
    if (with_violations > 0) {
      err << fmt::format("judge: warning: {} runs have integrity violations\n", with_violations);
    }
    Manifest manifest("judge", argv, out);
    manifest.add_input(traces);
    if (!config.empty()) manifest.add_input(config);
    std::vector<FlagVector> flags;
    if (m == "rules") {
      flags.reserve(corpus.size());
      for (const auto& t : corpus) flags.push_back(judge_rules(t, set));
    } else {
      write_file(*jc.audit_log, "");
      flags = judge_llm_corpus(corpus, set, jc);
      manifest.add_note("llm judgements are not reproducible; audit.jsonl records every exchange");
    }
    std::ostringstream f;
    write_flags(f, flags);
    write_file(fs::path(out) / "flags.jsonl", f.str());
    manifest.add_output("flags.jsonl");
    if (m == "llm") manifest.add_output("audit.jsonl");
    manifest.set_config(s.to_json());
    manifest.write();
    out_s << fmt::format("judged {} runs ({})\n", flags.size(), m);
  }
};

// --- stats / bridge / report share the trace + flags inputs ---

struct MatrixInputs {
  std::string traces, flags, out, config, format;
  CLI::Option* format_opt = nullptr;

  void add(CLI::App* app, const char* format_help) {
    app->add_option("--traces", traces, "Trace corpus (.jsonl)")->required();
    app->add_option("--flags", flags, "Flags file (.jsonl)")->required();
    app->add_option("--out", out, "Output directory")->required();
    app->add_option("--config", config, "TOML config file");
    format_opt = app->add_option("--format", format, format_help);
  }
};

struct StatsCmd {
  CLI::App* app = nullptr;
  MatrixInputs in;

  void setup(CLI::App& root) {
    app = root.add_subcommand("stats", "Failure-mode prevalence and reliability tables");
    in.add(app, "all, markdown, csv or json");
  }

  void run(const std::vector<std::string>& argv, std::ostream& out_s, std::ostream& err) {
    std::vector<fs::path> inputs{in.traces, in.flags};
    if (!in.config.empty()) inputs.emplace_back(in.config);
    prepare_paths(inputs, in.out);
    Settings s("stats", load_section(in.config, "stats"));
    const std::string format = s.get<std::string>("format", in.format_opt, in.format, "all");
    check_format(format);
    s.reject_unknown();
    s.print(err);
    const FlagMatrix m = load_matrix(load_corpus(in.traces), load_flags(in.flags));
    const StatsReport r = stats_report(m);
    Manifest manifest("stats", argv, in.out);
    manifest.add_input(in.traces);
    manifest.add_input(in.flags);
    if (!in.config.empty()) manifest.add_input(in.config);
    write_tables(manifest, in.out, "stats",
                 {contingency_table(r), prevalence_table(r), reliability_table(r)}, format);
    manifest.set_config(s.to_json());
    manifest.write();
    out_s << fmt::format("{} runs: {} failed, {} succeeded\n", r.n_runs, r.n_failure, r.n_success);
  }
};

struct SurrogateFlags {
  double l2 = 0.0;
  int max_iter = 0;
  std::string polarity;
  CLI::Option *l2_opt{}, *iter_opt{}, *pol_opt{};

  void add(CLI::App* app) {
    l2_opt = app->add_option("--l2", l2, "L2 penalty of the surrogate")->check(CLI::NonNegativeNumber);
    iter_opt = app->add_option("--max-iter", max_iter)->check(CLI::PositiveNumber);
    pol_opt = app->add_option("--polarity", polarity, "violation or satisfied")
                  ->check(CLI::IsMember({"violation", "satisfied"}));
  }

  BridgeConfig resolve(Settings& s) {
    BridgeConfig bc;
    bc.train.l2 = s.get<double>("l2", l2_opt, l2, bc.train.l2);
    bc.train.max_iter = s.get<int>("max_iter", iter_opt, max_iter, bc.train.max_iter);
    const std::string p = s.get<std::string>("polarity", pol_opt, polarity, "violation");
    if (p != "violation" && p != "satisfied") {
      throw CLI::ValidationError("polarity must be violation or satisfied");
    }
    bc.polarity = p == "violation" ? FeaturePolarity::kViolation : FeaturePolarity::kSatisfied;
    return bc;
  }
};

struct BridgeCmd {
  CLI::App* app = nullptr;
  MatrixInputs in;
  SurrogateFlags sf;

  void setup(CLI::App& root) {
    app = root.add_subcommand("bridge", "Rubric-flag surrogate with global SHAP attribution");
    in.add(app, "all, markdown, csv or json");
    sf.add(app);
  }

  void run(const std::vector<std::string>& argv, std::ostream& out_s, std::ostream& err) {
    std::vector<fs::path> inputs{in.traces, in.flags};
    if (!in.config.empty()) inputs.emplace_back(in.config);
    prepare_paths(inputs, in.out);
    Settings s("bridge", load_section(in.config, "bridge"));
    const std::string format = s.get<std::string>("format", in.format_opt, in.format, "all");
    check_format(format);
    const BridgeConfig bc = sf.resolve(s);
    s.reject_unknown();
    s.print(err);
    const FlagMatrix m = load_matrix(load_corpus(in.traces), load_flags(in.flags));
    const BridgeReport br = run_bridge(m, bc);
    const ParadigmSummary ps = paradigm_summary(br, stats_report(m));
    if (!br.converged) {
      err << fmt::format("bridge: warning: surrogate stopped after {} iterations (gradient {:.2e})\n",
                         br.iterations, br.grad_norm);
    }
    Manifest manifest("bridge", argv, in.out);
    manifest.add_input(in.traces);
    manifest.add_input(in.flags);
    if (!in.config.empty()) manifest.add_input(in.config);
    write_tables(manifest, in.out, "bridge", {bridge_table(br)}, format);
    write_tables(manifest, in.out, "paradigm", {paradigm_table(ps)}, format);
    write_file(fs::path(in.out) / "beeswarm.json", bridge_beeswarm_json(br));
    manifest.add_output("beeswarm.json");
    manifest.set_config(s.to_json());
    manifest.write();
    out_s << "ranking:";
    for (RubricId id : br.ranking) out_s << ' ' << rubric_key(id);
    out_s << '\n';
  }
};

struct ReportCmd {
  CLI::App* app = nullptr;
  MatrixInputs in;
  SurrogateFlags sf;

  void setup(CLI::App& root) {
    app = root.add_subcommand("report", "All trace-side tables in one document");
    in.add(app, "markdown (default), csv, json or all");
    sf.add(app);
  }

  void run(const std::vector<std::string>& argv, std::ostream& out_s, std::ostream& err) {
    std::vector<fs::path> inputs{in.traces, in.flags};
    if (!in.config.empty()) inputs.emplace_back(in.config);
    prepare_paths(inputs, in.out);
    Settings s("report", load_section(in.config, "report"));
    const std::string format = s.get<std::string>("format", in.format_opt, in.format, "markdown");
    check_format(format);
    const BridgeConfig bc = sf.resolve(s);
    s.reject_unknown();
    s.print(err);
    const FlagMatrix m = load_matrix(load_corpus(in.traces), load_flags(in.flags));
    const StatsReport r = stats_report(m);
    std::vector<Table> tables{contingency_table(r), prevalence_table(r), reliability_table(r)};
    try {
      const BridgeReport br = run_bridge(m, bc);
      tables.push_back(bridge_table(br));
      tables.push_back(paradigm_table(paradigm_summary(br, r)));
    } catch (const DegenerateOutcomeClass& e) {
      err << "report: surrogate skipped: " << e.what() << '\n';
    }
    Manifest manifest("report", argv, in.out);
    manifest.add_input(in.traces);
    manifest.add_input(in.flags);
    if (!in.config.empty()) manifest.add_input(in.config);
    write_tables(manifest, in.out, "report", tables, format);
    manifest.set_config(s.to_json());
    manifest.write();
    out_s << fmt::format("report written to {}\n", in.out);
  }
};

// --- static-xai ---

struct StaticXaiCmd {
  CLI::App* app = nullptr;
  std::string data, out, config, perturbation, format;
  std::uint64_t seed = 0;
  std::int64_t k = 0, n_perturb = 0, instances = 0, explain = 0, min_df = 0, ngram_max = 0,
               max_iter = 0, top = 0, threads = 0;
  double rate = 0.0, max_df = 0.0, l2 = 0.0, test_fraction = 0.0;
  CLI::Option *seed_opt{}, *k_opt{}, *np_opt{}, *inst_opt{}, *explain_opt{}, *mindf_opt{},
      *ngram_opt{}, *iter_opt{}, *top_opt{}, *threads_opt{}, *rate_opt{}, *maxdf_opt{}, *l2_opt{},
      *tf_opt{}, *pert_opt{}, *format_opt{}, *text_col_opt{}, *label_col_opt{};
  std::string text_column, label_column;

  void setup(CLI::App& root) {
    app = root.add_subcommand("static-xai",
                              "TF-IDF + logistic regression with SHAP, LIME, PDP and stability");
    app->add_option("--data", data, "CSV with text,label columns")->required();
    app->add_option("--out", out, "Output directory")->required();
    app->add_option("--config", config, "TOML file; reads the [static_xai] table");
    seed_opt = app->add_option("--seed", seed);
    k_opt = app->add_option("--k", k, "Top-k features compared")->check(CLI::PositiveNumber);
    np_opt = app->add_option("--n-perturb", n_perturb)->check(CLI::PositiveNumber);
    pert_opt = app->add_option("--perturbation", perturbation)
                   ->check(CLI::IsMember({"token_dropout", "bootstrap_retrain", "identity"}));
    rate_opt = app->add_option("--rate", rate, "Token dropout rate");
    inst_opt = app->add_option("--instances", instances, "Instances scored for stability")
                   ->check(CLI::PositiveNumber);
    explain_opt = app->add_option("--explain", explain, "Instances given local explanations")
                      ->check(CLI::NonNegativeNumber);
    mindf_opt = app->add_option("--min-df", min_df)->check(CLI::PositiveNumber);
    maxdf_opt = app->add_option("--max-df", max_df);
    ngram_opt = app->add_option("--ngram-max", ngram_max)->check(CLI::Range(1, 3));
    l2_opt = app->add_option("--l2", l2)->check(CLI::NonNegativeNumber);
    iter_opt = app->add_option("--max-iter", max_iter)->check(CLI::PositiveNumber);
    tf_opt = app->add_option("--test-fraction", test_fraction)->check(CLI::Range(0.0, 0.9));
    top_opt = app->add_option("--top", top, "Rows in the global attribution table")
                  ->check(CLI::PositiveNumber);
    threads_opt = app->add_option("--threads", threads, "0 = all cores")
                      ->check(CLI::NonNegativeNumber);
    format_opt = app->add_option("--format", format, "Stability table format");
    text_col_opt = app->add_option("--text-column", text_column, "CSV column holding the text");
    label_col_opt = app->add_option("--label-column", label_column, "CSV column holding the 0/1 label");
  }

  void run(const std::vector<std::string>& argv, std::ostream& out_s, std::ostream& err) {
    std::vector<fs::path> inputs{data};
    if (!config.empty()) inputs.emplace_back(config);
    prepare_paths(inputs, out);
    Settings s("static_xai", load_section(config, "static_xai"));
    xai::StabilityConfig sc;
    sc.seed = s.get<std::uint64_t>("seed", seed_opt, seed, sc.seed);
    sc.k = static_cast<std::size_t>(s.get<std::int64_t>("k", k_opt, k, 10));
    sc.n_perturb = static_cast<int>(s.get<std::int64_t>("n_perturb", np_opt, n_perturb, 20));
    sc.perturbation = xai::parse_perturbation(
        s.get<std::string>("perturbation", pert_opt, perturbation, "token_dropout"));
    sc.rate = s.get<double>("rate", rate_opt, rate, sc.rate);
    sc.threads = static_cast<unsigned>(s.get<std::int64_t>("threads", threads_opt, threads, 0));
    const auto n_inst = s.get<std::int64_t>("instances", inst_opt, instances, 50);
    const auto n_explain = s.get<std::int64_t>("explain", explain_opt, explain, 5);
    xai::TfIdfConfig tc;
    tc.min_df = s.get<std::int64_t>("min_df", mindf_opt, min_df, tc.min_df);
    tc.max_df = s.get<double>("max_df", maxdf_opt, max_df, tc.max_df);
    tc.ngram_max = static_cast<int>(s.get<std::int64_t>("ngram_max", ngram_opt, ngram_max, 2));
    xai::LogRegConfig lc;
    lc.l2 = s.get<double>("l2", l2_opt, l2, lc.l2);
    lc.max_iter = static_cast<int>(s.get<std::int64_t>("max_iter", iter_opt, max_iter, lc.max_iter));
    const double tfrac = s.get<double>("test_fraction", tf_opt, test_fraction, 0.2);
    const auto n_top = s.get<std::int64_t>("top", top_opt, top, 50);
    const std::string fmt_spec = s.get<std::string>("format", format_opt, format, "all");
    xai::CsvColumns columns;
    columns.text = s.get<std::string>("text_column", text_col_opt, text_column, columns.text);
    columns.label = s.get<std::string>("label_column", label_col_opt, label_column, columns.label);
    check_format(fmt_spec);
    sc.validate();
    if (!(tfrac >= 0.0 && tfrac < 1.0)) throw CLI::ValidationError("test_fraction must be in [0, 1)");
    s.reject_unknown();
    s.print(err);

    const xai::TextDataset ds = xai::read_text_csv(fs::path(data), columns);
    if (ds.texts.size() < 2) throw DataError("dataset needs at least two rows");

    // Deterministic train/test split.
    std::vector<std::size_t> order(ds.texts.size());
    std::iota(order.begin(), order.end(), 0);
    Rng split_rng(derive_stream_seed(sc.seed, 0x73706c6974, 0));  // "split"
    split_rng.shuffle(order);
    const auto n_test = static_cast<std::size_t>(std::floor(tfrac * static_cast<double>(order.size())));
    std::vector<std::size_t> test_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
    std::vector<std::size_t> train_idx(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
    std::sort(test_idx.begin(), test_idx.end());
    std::sort(train_idx.begin(), train_idx.end());
    std::vector<std::string> train_texts;
    std::vector<int> train_y;
    for (auto i : train_idx) {
      train_texts.push_back(ds.texts[i]);
      train_y.push_back(ds.labels[i]);
    }

    xai::StaticModel model;
    model.tfidf = xai::fit_tfidf(train_texts, tc);
    const xai::SparseMatrix X = xai::transform_all(model.tfidf, train_texts);
    const xai::TrainResult trained = xai::train_logreg(X, train_y, lc);
    model.linear = trained.model;
    if (!trained.converged) {
      err << fmt::format("static-xai: warning: training stopped after {} iterations\n",
                         trained.iterations);
    }

    auto accuracy = [&](const std::vector<std::size_t>& idx) -> OJson {
      if (idx.empty()) return nullptr;
      std::size_t hit = 0;
      for (auto i : idx) {
        const double p = xai::predict_proba(model.linear, xai::transform(model.tfidf, ds.texts[i]));
        hit += (p >= 0.5 ? 1 : 0) == ds.labels[i] ? 1 : 0;
      }
      return static_cast<double>(hit) / static_cast<double>(idx.size());
    };

    Manifest manifest("static-xai", argv, out);
    manifest.add_input(data);
    if (!config.empty()) manifest.add_input(config);
    const fs::path dir(out);

    xai::save_static_model(model, dir / "model.json");
    manifest.add_output("model.json");

    OJson train_info;
    train_info["n_train"] = train_idx.size();
    train_info["n_test"] = test_idx.size();
    train_info["vocabulary"] = model.tfidf.dim();
    train_info["iterations"] = trained.iterations;
    train_info["grad_norm"] = trained.grad_norm;
    train_info["final_loss"] = trained.final_loss;
    train_info["converged"] = trained.converged;
    train_info["train_accuracy"] = accuracy(train_idx);
    train_info["test_accuracy"] = accuracy(test_idx);
    write_file(dir / "train.json", train_info.dump(2) + "\n");
    manifest.add_output("train.json");

    // Global attribution.
    const xai::Attribution global = xai::mean_abs_shap(model.linear, X);
    const auto rank = xai::ranking(global.scores);
    {
      std::string csv = "rank,term,mean_abs_shap,weight\n";
      OJson js = OJson::array();
      for (std::size_t r = 0; r < rank.size() && r < static_cast<std::size_t>(n_top); ++r) {
        const auto j = rank[r];
        const std::string& term = model.tfidf.terms[j];
        csv += fmt::format("{},{},{:.6f},{:.6f}\n", r + 1, term, global.scores[j],
                           model.linear.weights[j]);
        js.push_back(OJson{{"rank", r + 1}, {"term", term}, {"mean_abs_shap", global.scores[j]},
                           {"weight", model.linear.weights[j]}});
      }
      write_file(dir / "global_shap.csv", csv);
      write_file(dir / "global_shap.json", OJson{{"base_value", global.base_value}, {"features", js}}.dump(2) + "\n");
      manifest.add_output("global_shap.csv");
      manifest.add_output("global_shap.json");
    }

    // PDP over the most influential term.
    if (!rank.empty()) {
      const auto j = rank.front();
      double hi = 0.0;
      for (const auto& row : X.rows) hi = std::max(hi, row.get(j));
      std::vector<double> grid;
      for (int g = 0; g < 5; ++g) grid.push_back(hi * g / 4.0);
      const auto curve = xai::pdp(
          [&](const xai::SparseVector& v) { return xai::predict_proba(model.linear, v); }, X, j,
          grid);
      std::string csv = "term,value,mean_prediction\n";
      for (const auto& pt : curve) {
        csv += fmt::format("{},{:.6f},{:.6f}\n", model.tfidf.terms[j], pt.value, pt.mean_prediction);
      }
      write_file(dir / "pdp.csv", csv);
      manifest.add_output("pdp.csv");
    }

    // Instances: held-out rows if any, otherwise training rows.
    const std::vector<std::size_t>& pool = test_idx.empty() ? train_idx : test_idx;
    std::vector<std::string> inst_texts;
    std::vector<std::size_t> inst_rows;
    for (std::size_t t = 0; t < pool.size() && t < static_cast<std::size_t>(n_inst); ++t) {
      inst_texts.push_back(ds.texts[pool[t]]);
      inst_rows.push_back(pool[t]);
    }

    // Local explanations.
    {
      std::string lines;
      const xai::PredictFn proba = [&](const xai::SparseVector& v) {
        return xai::predict_proba(model.linear, v);
      };
      for (std::size_t t = 0; t < inst_rows.size() && t < static_cast<std::size_t>(n_explain); ++t) {
        const auto x = xai::transform(model.tfidf, inst_texts[t]);
        const double p = xai::predict_proba(model.linear, x);
        const auto phi = xai::shap_linear(model.linear, x);
        OJson line;
        line["row"] = inst_rows[t];
        line["label"] = ds.labels[inst_rows[t]];
        line["proba"] = p;
        line["shap_base_value"] = phi.base_value;
        OJson shap = OJson::array();
        std::vector<double> mag(phi.scores.size());
        for (std::size_t i = 0; i < mag.size(); ++i) mag[i] = std::abs(phi.scores[i]);
        for (auto i : xai::top_k(mag, sc.k)) {
          shap.push_back(OJson{{"term", model.tfidf.terms[i]}, {"phi", phi.scores[i]}});
        }
        line["shap"] = shap;
        OJson lime = OJson::array();
        if (x.nnz() > 0) {
          xai::LimeConfig lcfg;
          lcfg.k = sc.k;
          lcfg.seed = sc.seed;
          for (const auto& f : xai::lime_explain(proba, x, lcfg).features) {
            lime.push_back(OJson{{"term", model.tfidf.terms[f.feature]}, {"weight", f.weight}});
          }
        }
        line["lime"] = lime;
        lines += line.dump() + "\n";
      }
      write_file(dir / "local.jsonl", lines);
      manifest.add_output("local.jsonl");
    }

    // Stability.
    if (sc.k > model.tfidf.dim()) throw DataError("k exceeds the vocabulary size");
    auto explain_text = [&](const std::string& text) {
      auto scores = xai::shap_linear(model.linear, xai::transform(model.tfidf, text)).scores;
      for (double& v : scores) v = std::abs(v);
      return scores;
    };
    xai::StabilityResult sr;
    if (sc.perturbation == xai::Perturbation::kBootstrapRetrain) {
      xai::SparseMatrix inst = xai::transform_all(model.tfidf, inst_texts);
      sr = xai::stability_bootstrap(X, train_y, inst, sc, lc);
    } else if (sc.perturbation == xai::Perturbation::kIdentity) {
      sr = xai::stability_identity<std::string>(explain_text, std::span<const std::string>(inst_texts), sc);
    } else {
      const double rate_v = sc.rate;
      sr = xai::stability_score<std::string>(
          explain_text, std::span<const std::string>(inst_texts), sc,
          [rate_v](const std::string& text, Rng& rng) { return xai::token_dropout(text, rate_v, rng); });
    }
    write_tables(manifest, out, "stability", {stability_table(sr, sc)}, fmt_spec);

    manifest.set_seed(sc.seed);
    manifest.set_config(s.to_json());
    manifest.write();
    out_s << fmt::format("vocabulary {} terms, stability rho {:.3f} over {} pairs ({} skipped)\n",
                         model.tfidf.dim(), sr.mean_rho, sr.pairs_evaluated, sr.pairs_skipped);
  }
};

// --- mep ---

std::optional<synth::SynthConfig> synth_config_from_manifest(const fs::path& path) {
  const auto j = nlohmann::json::parse(read_file(path), nullptr, false);
  if (j.is_discarded() || !j.is_object() || j.value("command", "") != "synth") {
    throw DataError(path.string() + " is not a synth manifest");
  }
  try {
    const auto& c = j.at("config");
    synth::SynthConfig cfg;
    cfg.seed = c.at("seed").at("value").get<std::uint64_t>();
    cfg.n_runs = c.at("runs").at("value").get<std::size_t>();
    const auto& f = c.at("faults").at("value");
    for (RubricId id : kCanonicalRubrics) {
      cfg.faults[id] = f.at(std::string(rubric_key(id))).get<double>();
    }
    cfg.faults.seed = f.at("seed").get<std::uint64_t>();
    const auto& o = c.at("outcome").at("value");
    cfg.outcome.bias = o.at("bias").get<double>();
    for (RubricId id : kCanonicalRubrics) {
      cfg.outcome.weights[rubric_index(id)] =
          o.at("weights").at(std::string(rubric_key(id))).get<double>();
    }
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

bool replay_matches(const Trajectory& t, const synth::SynthConfig& cfg) {
  const auto it = t.meta.find("replay");
  if (it == t.meta.end() || !it->contains("ordinal")) return false;
  synth::ReplayConfig rc;
  rc.seed = cfg.seed;
  rc.faults = cfg.faults;
  rc.outcome = cfg.outcome;
  rc.n_runs = cfg.n_runs;
  rc.ordinal = it->at("ordinal").get<std::size_t>();
  if (rc.ordinal >= rc.n_runs) return false;
  return serialize_trajectory(synth::replay(rc)) == serialize_trajectory(t);
}

std::string safe_name(const std::string& id) {
  std::string out;
  for (char c : id) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.') ? c : '_';
  return out;
}

struct MepCmd {
  CLI::App* app = nullptr;
  std::string paradigm, out, traces, flags, synth_manifest, model, data, scope;
  std::string text_column = "text", label_column = "label";
  std::vector<std::string> run_ids;
  std::int64_t index = 0, top_n = 20;
  double stability = 0.0;
  CLI::Option* stability_opt = nullptr;
  CLI::Option* top_n_opt = nullptr;

  void setup(CLI::App& root) {
    app = root.add_subcommand("mep", "Build explanation packets (.mep.json)");
    app->add_option("--paradigm", paradigm, "static or agentic")
        ->required()
        ->check(CLI::IsMember({"static", "agentic"}));
    app->add_option("--out", out, "Output directory")->required();
    app->add_option("--traces", traces, "agentic: trace corpus");
    app->add_option("--flags", flags, "agentic: flags file");
    app->add_option("--run-id", run_ids, "agentic: runs to package (default all)");
    app->add_option("--synth-manifest", synth_manifest,
                    "agentic: synth run.json used for the replay check");
    app->add_option("--model", model, "static: model.json from static-xai");
    app->add_option("--data", data, "static: CSV the model explains");
    app->add_option("--index", index, "static: data row for a local packet")
        ->check(CLI::NonNegativeNumber);
    app->add_option("--scope", scope, "static: local or global")
        ->check(CLI::IsMember({"local", "global"}));
    stability_opt = app->add_option("--stability", stability, "static: stability rho to attach");
    top_n_opt = app->add_option("--top-n", top_n, "static: features kept")->check(CLI::NonNegativeNumber);
    app->add_option("--text-column", text_column, "static: CSV text column");
    app->add_option("--label-column", label_column, "static: CSV label column");
  }

  void run(const std::vector<std::string>& argv, std::ostream& out_s, std::ostream& err) {
    Manifest manifest("mep", argv, out);
    Settings s("mep", std::nullopt);
    s.record("paradigm", paradigm, "flag");
    std::size_t written = 0;
    if (paradigm == "agentic") {
      if (traces.empty() || flags.empty()) {
        throw CLI::ValidationError("agentic packets need --traces and --flags");
      }
      std::vector<fs::path> inputs{traces, flags};
      if (!synth_manifest.empty()) inputs.emplace_back(synth_manifest);
      prepare_paths(inputs, out);
      const auto corpus = load_corpus(traces);
      const auto fl = load_flags(flags);
      std::optional<synth::SynthConfig> cfg;
      if (!synth_manifest.empty()) {
        cfg = synth_config_from_manifest(synth_manifest);
      } else {
        err << "mep: warning: no --synth-manifest; replay_consistent is false for every packet\n";
      }
      s.record("synth_manifest", synth_manifest, synth_manifest.empty() ? "default" : "flag");
      s.print(err);
      manifest.add_input(traces);
      manifest.add_input(flags);
      if (!synth_manifest.empty()) manifest.add_input(synth_manifest);
      std::map<std::string, const FlagVector*> by_id;
      for (const auto& f : fl) by_id[f.run_id] = &f;
      const std::set<std::string> wanted(run_ids.begin(), run_ids.end());
      for (const auto& t : corpus) {
        if (!wanted.empty() && !wanted.contains(t.run_id)) continue;
        const auto it = by_id.find(t.run_id);
        if (it == by_id.end()) throw CorpusMismatch("no flags for run " + t.run_id);
        const bool replay_ok = cfg ? replay_matches(t, *cfg) : false;
        const auto packet =
            mep::build_agentic_mep(t, *it->second, replay_ok, validate_trajectory(t));
        const std::string name = safe_name(t.run_id) + ".mep.json";
        write_file(fs::path(out) / name, mep::serialize(packet) + "\n");
        manifest.add_output(name);
        ++written;
      }
      for (const auto& id : wanted) {
        if (std::none_of(corpus.begin(), corpus.end(), [&](const Trajectory& t) { return t.run_id == id; })) {
          throw DataError("run id not in corpus: " + id);
        }
      }
    } else {
      if (model.empty() || data.empty()) {
        throw CLI::ValidationError("static packets need --model and --data");
      }
      if (stability_opt->count() == 0) {
        throw CLI::ValidationError("static packets need --stability (from static-xai)");
      }
      prepare_paths({model, data}, out);
      const std::string sc = scope.empty() ? "local" : scope;
      s.record("scope", sc, scope.empty() ? "default" : "flag");
      s.record("stability", stability, "flag");
      s.record("top_n", top_n, top_n_opt->count() > 0 ? "flag" : "default");
      s.print(err);
      manifest.add_input(model);
      manifest.add_input(data);
      const auto sm = xai::load_static_model(model);
      const auto ds = xai::read_text_csv(fs::path(data), xai::CsvColumns{text_column, label_column});
      mep::StaticModelRef ref{sha256_file(model), sm.tfidf.terms};
      std::string name;
      mep::ExplanationPacket packet;
      if (sc == "local") {
        if (static_cast<std::size_t>(index) >= ds.texts.size()) {
          throw DataError(fmt::format("--index {} is outside the {} data rows", index, ds.texts.size()));
        }
        const auto& text = ds.texts[static_cast<std::size_t>(index)];
        const auto x = xai::transform(sm.tfidf, text);
        const double p = xai::predict_proba(sm.linear, x);
        const int label = p >= 0.5 ? 1 : 0;
        packet = mep::build_static_mep(ref, {text, label, label == 1 ? p : 1.0 - p},
                                       xai::shap_linear(sm.linear, x), stability,
                                       static_cast<std::size_t>(top_n));
        name = fmt::format("static-local-{}.mep.json", index);
      } else {
        const auto X = xai::transform_all(sm.tfidf, ds.texts);
        const auto global = xai::mean_abs_shap(sm.linear, X);
        std::optional<mep::PdpReference> pdp;
        if (!global.scores.empty()) {
          const auto j = xai::ranking(global.scores).front();
          double hi = 0.0;
          for (const auto& row : X.rows) hi = std::max(hi, row.get(j));
          std::vector<double> grid;
          for (int g = 0; g < 5; ++g) grid.push_back(hi * g / 4.0);
          pdp = mep::PdpReference{
              sm.tfidf.terms[j],
              xai::pdp([&](const xai::SparseVector& v) { return xai::predict_proba(sm.linear, v); },
                       X, j, grid)};
        }
        packet = mep::build_global_static_mep(ref, global, stability, sha256_file(data),
                                              static_cast<std::int64_t>(ds.texts.size()), pdp,
                                              static_cast<std::size_t>(top_n));
        name = "static-global.mep.json";
      }
      write_file(fs::path(out) / name, mep::serialize(packet) + "\n");
      manifest.add_output(name);
      ++written;
    }
    manifest.set_config(s.to_json());
    manifest.write();
    out_s << fmt::format("wrote {} packets\n", written);
  }
};

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Trace-based and attribution-based explainability toolkit", kToolName};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);
  SynthCmd synth_cmd;
  JudgeCmd judge_cmd;
  StatsCmd stats_cmd;
  StaticXaiCmd static_cmd;
  BridgeCmd bridge_cmd;
  MepCmd mep_cmd;
  ReportCmd report_cmd;
  synth_cmd.setup(app);
  judge_cmd.setup(app);
  stats_cmd.setup(app);
  static_cmd.setup(app);
  bridge_cmd.setup(app);
  mep_cmd.setup(app);
  report_cmd.setup(app);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  std::vector<std::string> argv{kToolName};
  argv.insert(argv.end(), args.begin(), args.end());
  try {
    if (synth_cmd.app->parsed()) synth_cmd.run(argv, out, err);
    else if (judge_cmd.app->parsed()) judge_cmd.run(argv, out, err);
    else if (stats_cmd.app->parsed()) stats_cmd.run(argv, out, err);
    else if (static_cmd.app->parsed()) static_cmd.run(argv, out, err);
    else if (bridge_cmd.app->parsed()) bridge_cmd.run(argv, out, err);
    else if (mep_cmd.app->parsed()) mep_cmd.run(argv, out, err);
    else if (report_cmd.app->parsed()) report_cmd.run(argv, out, err);
    return kExitOk;
  } catch (const CLI::Error& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const TransportError& e) {
    err << "transport error: " << e.what() << '\n';
    return kExitTransport;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}

}  // namespace tracexp::cli
