#include "capr/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "capr/config.hpp"
#include "capr/corpus.hpp"
#include "capr/error.hpp"
#include "capr/evaluation.hpp"
#include "capr/log_store.hpp"
#include "capr/surrogate.hpp"
#include "capr/synthetic_world.hpp"
#include "capr/text.hpp"
#include "capr/tuner.hpp"

namespace capr::cli {

namespace fs = std::filesystem;

std::vector<std::string> read_prompts(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open prompt file " + path.string());
  std::vector<std::string> prompts;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!text::is_blank(line)) prompts.push_back(line);
  }
  if (prompts.empty()) throw InvalidArgument("prompt file " + path.string() + " is empty");
  return prompts;
}

void write_prompts(const fs::path& path, const std::vector<std::string>& prompts) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& p : prompts) out << p << '\n';
}

namespace {

class UsageError : public Error {
 public:
  using Error::Error;
};

void require_file(const std::string& path, const char* what) {
  if (path.empty() || !fs::exists(path)) {
    throw UsageError(std::string(what) + " not found: '" + path + "'");
  }
}

void write_text(const fs::path& path, const std::string& body) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << body;
  if (!out) throw IoError("write failed for " + path.string());
}

struct Inference {
  Lexicon lexicon;
  Backends backends;
  QuantizerSpec spec;
  RidgeSurrogate predictor;
};

Inference load_inference(const RunConfig& cfg, const std::string& model_path,
                         const std::string& quantizer_path) {
  require_file(model_path, "surrogate model");
  require_file(quantizer_path, "quantizer");
  auto lexicon = cfg.lexicon();
  auto model = surrogate_from_json(read_json_file(model_path));
  auto spec = quantizer_from_json(read_json_file(quantizer_path));
  return {lexicon, cfg.backends(), spec, RidgeSurrogate(std::move(model), lexicon)};
}

// Parses "a,b,c" into integers.
std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  for (const auto& part : text::split(s, ',')) {
    const auto t = text::trim(part);
    if (t.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(t, &used));
      if (used != t.size()) throw std::invalid_argument(t);
    } catch (const std::exception&) {
      throw UsageError("not an integer list: '" + s + "'");
    }
  }
  return out;
}

// Fallback delta when no delta.json exists.
constexpr DeltaVector kReferenceDelta{9, 0, 9, 5};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Capability-aware prompt reformulation pipeline", "capr"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  if (const char* env = std::getenv("CAPR_CONFIG")) config_path = env;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> backend;
  app.add_option("--config", config_path, "JSON run config (default: $CAPR_CONFIG)");
  app.add_option("--seed", seed, "Seed for every random choice");
  app.add_option("--workers", workers, "Parallel backend calls")->check(CLI::PositiveNumber);
  app.add_option("--backend", backend, "synthetic | remote")->check(CLI::IsMember({"synthetic", "remote"}));

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Ingest an NDJSON interaction log into a store");
  std::string ingest_input;
  std::optional<std::string> ingest_store;
  ingest->add_option("--input", ingest_input, "NDJSON log ('-' for stdin)")->required();
  ingest->add_option("--store", ingest_store, "Store directory");

  // sessions
  auto* sessions = app.add_subcommand("sessions", "Segment sessions and extract reformulation pairs");
  std::optional<std::string> sessions_store, sessions_out, pairs_out;
  std::optional<std::int64_t> gap_seconds;
  std::optional<double> sim_threshold;
  sessions->add_option("--store", sessions_store, "Store directory");
  sessions->add_option("--gap-seconds", gap_seconds, "Max gap between adjacent prompts (default 1200)")
      ->check(CLI::PositiveNumber);
  sessions->add_option("--sim-threshold", sim_threshold, "Similarity to exceed (default 0.1)")
      ->check(CLI::Range(0.0, 1.0));
  sessions->add_option("--out", sessions_out, "Sessions JSONL");
  sessions->add_option("--pairs", pairs_out, "Reformulation pairs JSONL");

  // report
  auto* report = app.add_subcommand("report", "Initial-vs-final session quality report");
  std::optional<std::string> report_sessions;
  std::string report_out, report_hist;
  double bin_width = 0.05;
  report->add_option("--sessions", report_sessions, "Sessions JSONL");
  report->add_option("--out", report_out, "Report CSV (default <reports>/session_report.csv)");
  report->add_option("--histogram", report_hist, "Histogram CSV (default <reports>/session_histogram.csv)");
  report->add_option("--bin-width", bin_width, "Histogram bin width")->check(CLI::PositiveNumber);

  // corpus
  auto* corpus = app.add_subcommand("corpus", "Build, split and export the conditional training corpus");
  std::optional<std::string> corpus_pairs, corpus_out;
  std::optional<int> corpus_k;
  std::optional<double> val_fraction;
  corpus->add_option("--pairs", corpus_pairs, "Reformulation pairs JSONL");
  corpus->add_option("--out", corpus_out, "Output directory");
  corpus->add_option("--k", corpus_k, "Quantization bins (default 10)")->check(CLI::Range(2, 1000));
  corpus->add_option("--val-fraction", val_fraction, "Validation share of sessions")
      ->check(CLI::Range(0.0, 1.0));

  // surrogate fit | predict
  auto* surrogate = app.add_subcommand("surrogate", "Fit or query the prompt-quality surrogate");
  surrogate->require_subcommand(1);
  auto* sfit = surrogate->add_subcommand("fit", "Fit the ridge surrogate");
  std::optional<std::string> sfit_data, sfit_out;
  std::optional<double> sfit_lambda;
  sfit->add_option("--data", sfit_data, "Scored prompts JSONL (default <corpus>/surrogate_train.jsonl)");
  sfit->add_option("--out", sfit_out, "Model JSON");
  sfit->add_option("--lambda", sfit_lambda, "Ridge strength")->check(CLI::PositiveNumber);
  auto* spredict = surrogate->add_subcommand("predict", "Predict quality scores for prompts");
  std::optional<std::string> spredict_model;
  std::vector<std::string> spredict_prompts;
  spredict->add_option("--model", spredict_model, "Model JSON");
  spredict->add_option("--prompt", spredict_prompts, "Prompt (repeatable)")->required();

  // tune
  auto* tune_cmd = app.add_subcommand("tune", "Tune the capability delta by Bayesian optimization");
  std::optional<std::string> tune_prompts, tune_model, tune_quantizer, tune_out;
  std::optional<std::size_t> budget, n_initial;
  std::optional<int> tune_steps;
  tune_cmd->add_option("--prompts", tune_prompts, "Validation prompts, one per line");
  tune_cmd->add_option("--model", tune_model, "Surrogate model JSON");
  tune_cmd->add_option("--quantizer", tune_quantizer, "quantizer.json");
  tune_cmd->add_option("--budget", budget, "Objective calls (default 50)")->check(CLI::PositiveNumber);
  tune_cmd->add_option("--n-initial", n_initial, "Random initial design size (default 10)")
      ->check(CLI::PositiveNumber);
  tune_cmd->add_option("--steps", tune_steps, "Generation steps while tuning (default 20)");
  tune_cmd->add_option("--out", tune_out, "delta.json");

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate the tuned policy against baselines");
  std::optional<std::string> eval_prompts, eval_model, eval_quantizer, eval_delta, eval_out;
  std::optional<int> images_per_prompt;
  eval->add_option("--prompts", eval_prompts, "Test prompts, one per line");
  eval->add_option("--model", eval_model, "Surrogate model JSON");
  eval->add_option("--quantizer", eval_quantizer, "quantizer.json");
  eval->add_option("--delta", eval_delta, "delta.json");
  eval->add_option("--images-per-prompt", images_per_prompt, "Images per prompt (default 4)")
      ->check(CLI::PositiveNumber);
  eval->add_option("--out", eval_out, "report.json (default <reports>/report.json)");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Vary one delta component with the others frozen");
  std::string sweep_factor = "aesthetic";
  std::string sweep_values = "0,1,2,3,4,5,6,7,8,9";
  std::string sweep_frozen = "0,0,0,5";
  std::optional<std::string> sweep_prompts, sweep_model, sweep_quantizer, sweep_out;
  sweep->add_option("--factor", sweep_factor, "overall | similarity | aesthetic | length")
      ->check(CLI::IsMember({"overall", "similarity", "aesthetic", "length"}));
  sweep->add_option("--values", sweep_values, "Comma-separated delta values");
  sweep->add_option("--frozen", sweep_frozen, "Frozen overall,similarity,aesthetic,length");
  sweep->add_option("--prompts", sweep_prompts, "Prompts, one per line (default: test prompts)");
  sweep->add_option("--model", sweep_model, "Surrogate model JSON");
  sweep->add_option("--quantizer", sweep_quantizer, "quantizer.json");
  sweep->add_option("--images-per-prompt", images_per_prompt, "Images per prompt (default 4)")
      ->check(CLI::PositiveNumber);
  sweep->add_option("--out", sweep_out, "sweep.csv (default <reports>/sweep.csv)");

  // reformulate
  auto* reform = app.add_subcommand("reformulate", "Reformulate one prompt under the tuned delta");
  std::string reform_prompt;
  std::optional<std::string> reform_model, reform_quantizer, reform_delta;
  reform->add_option("--prompt", reform_prompt, "Prompt to reformulate")->required();
  reform->add_option("--model", reform_model, "Surrogate model JSON");
  reform->add_option("--quantizer", reform_quantizer, "quantizer.json");
  reform->add_option("--delta", reform_delta, "delta.json (default: reference delta 9,0,9,5 if absent)");

  // synth logs | prompts
  auto* synth = app.add_subcommand("synth", "Produce synthetic-world logs or prompt sets");
  synth->require_subcommand(1);
  auto* synth_logs = synth->add_subcommand("logs", "Simulated interaction log (NDJSON)");
  std::string synth_logs_out;
  std::size_t synth_users = 40, synth_sessions = 6;
  synth_logs->add_option("--out", synth_logs_out, "Output NDJSON")->required();
  synth_logs->add_option("--users", synth_users, "Number of users");
  synth_logs->add_option("--sessions-per-user", synth_sessions, "Sessions per user");
  auto* synth_prompts = synth->add_subcommand("prompts", "Sampled prompt set, one per line");
  std::string synth_prompts_out;
  std::size_t synth_count = 100;
  synth_prompts->add_option("--out", synth_prompts_out, "Output file")->required();
  synth_prompts->add_option("--count", synth_count, "Number of prompts");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success)) {
      app.exit(e, out, err);
      return kExitOk;
    }
    err << "usage error: " << e.what() << '\n' << app.help();
    return kExitUsage;
  }

  try {
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
    if (seed) cfg.seed = *seed;
    if (workers) cfg.workers = *workers;
    if (backend) cfg.backend = *backend;
    cfg.validate();
    const fs::path reports_dir = cfg.paths.reports;
    const fs::path corpus_dir = cfg.paths.corpus;
    const std::string default_quantizer = (corpus_dir / "quantizer.json").string();

    if (ingest->parsed()) {
      const std::string store_dir = ingest_store.value_or(cfg.paths.store);
      IngestReport rep;
      LogStore store;
      if (ingest_input == "-") {
        store = LogStore::ingest(std::cin, &rep);
      } else {
        require_file(ingest_input, "input log");
        std::ifstream in(ingest_input, std::ios::binary);
        store = LogStore::ingest(in, &rep);
      }
      store.save(store_dir);
      out << nlohmann::json{{"ingested", rep.ingested},
                            {"skipped", rep.skipped()},
                            {"malformed", rep.malformed},
                            {"duplicates", rep.duplicates}}
                 .dump()
          << '\n';
    } else if (sessions->parsed()) {
      if (gap_seconds) cfg.gap_seconds = *gap_seconds;
      if (sim_threshold) cfg.sim_threshold = *sim_threshold;
      const std::string store_dir = sessions_store.value_or(cfg.paths.store);
      require_file(store_dir, "store");
      const auto store = LogStore::load(store_dir);
      const auto backends = cfg.backends();
      const auto segs = segment_sessions(store, *backends.similarity,
                                         {cfg.gap_seconds, cfg.sim_threshold, cfg.workers});
      const auto pairs = extract_pairs(segs);
      std::vector<nlohmann::json> srows, prows;
      for (const auto& s : segs) srows.push_back(to_json(s));
      for (const auto& p : pairs) prows.push_back(to_json(p));
      write_jsonl(sessions_out.value_or(cfg.paths.sessions), srows);
      write_jsonl(pairs_out.value_or(cfg.paths.pairs), prows);
      out << nlohmann::json{{"records", store.records().size()},
                            {"sessions", segs.size()},
                            {"pairs", pairs.size()},
                            {"gap_seconds", cfg.gap_seconds},
                            {"sim_threshold", cfg.sim_threshold}}
                 .dump()
          << '\n';
    } else if (report->parsed()) {
      const std::string path = report_sessions.value_or(cfg.paths.sessions);
      require_file(path, "sessions file");
      std::vector<Session> segs;
      for (const auto& j : read_jsonl(path)) segs.push_back(session_from_json(j));
      const auto backends = cfg.backends();
      std::optional<PromptScorer> scorer;
      if (backends.generator && backends.scorer) scorer.emplace(*backends.generator, *backends.scorer, 1, cfg.eval_steps);
      const auto rep = session_report(segs, scorer ? &*scorer : nullptr, backends.scorer.get());
      std::ostringstream csv, hist;
      write_session_report_csv(rep, csv);
      write_histogram_csv(rep, bin_width, hist);
      write_text(report_out.empty() ? reports_dir / "session_report.csv" : fs::path(report_out), csv.str());
      write_text(report_hist.empty() ? reports_dir / "session_histogram.csv" : fs::path(report_hist), hist.str());
      out << nlohmann::json{{"rows", rep.rows.size()}, {"skipped", rep.skipped}}.dump() << '\n';
      if (rep.skipped) err << "warning: " << rep.skipped << " session(s) skipped without scores\n";
    } else if (corpus->parsed()) {
      if (corpus_k) cfg.k = *corpus_k;
      if (val_fraction) cfg.val_fraction = *val_fraction;
      const std::string path = corpus_pairs.value_or(cfg.paths.pairs);
      require_file(path, "pairs file");
      std::vector<ReformulationPair> pairs;
      for (const auto& j : read_jsonl(path)) pairs.push_back(pair_from_json(j));
      const auto backends = cfg.backends();
      std::optional<PromptScorer> scorer;
      if (backends.generator && backends.scorer) {
        scorer.emplace(*backends.generator, *backends.scorer, cfg.corpus_images_per_prompt, cfg.eval_steps);
      }
      resolve_pair_scores(pairs, scorer ? &*scorer : nullptr);
      const auto pooled = pooled_scores(pairs);
      if (pooled.empty()) throw EmptyCorpusError("empty corpus: no pair could be scored");
      const auto spec = fit_quantizer(pooled, cfg.k);
      const auto built = build_triplets(pairs, spec, scorer ? &*scorer : nullptr);
      const auto [train, val] = split(built.triplets, cfg.val_fraction, cfg.seed);
      const fs::path dir = corpus_out.value_or(cfg.paths.corpus);
      export_corpus(train, val, spec, built.stats, dir);
      write_scored_prompts(dir / "surrogate_train.jsonl", surrogate_training_set(pairs));
      out << nlohmann::json{{"triplets", built.triplets.size()},
                            {"train", train.size()},
                            {"validation", val.size()},
                            {"dropped_unscorable", built.stats.dropped_unscorable},
                            {"dropped_zero_phrase", built.stats.dropped_zero_phrase}}
                 .dump()
          << '\n';
    } else if (sfit->parsed()) {
      if (sfit_lambda) cfg.ridge_lambda = *sfit_lambda;
      const std::string data = sfit_data.value_or((corpus_dir / "surrogate_train.jsonl").string());
      require_file(data, "surrogate training data");
      const auto samples = read_scored_prompts(data);
      const auto model = fit_surrogate(samples, cfg.lexicon(), cfg.ridge_lambda);
      write_json_file(sfit_out.value_or(cfg.paths.surrogate), to_json(model));
      out << nlohmann::json{{"n_train", model.n_train}, {"lambda", model.lambda}}.dump() << '\n';
    } else if (spredict->parsed()) {
      const std::string path = spredict_model.value_or(cfg.paths.surrogate);
      require_file(path, "surrogate model");
      const RidgeSurrogate predictor(surrogate_from_json(read_json_file(path)), cfg.lexicon());
      for (const auto& p : spredict_prompts) {
        out << nlohmann::json{{"prompt", p}, {"scores", to_json(predictor.predict(p))}}.dump() << '\n';
      }
    } else if (tune_cmd->parsed()) {
      if (budget) cfg.budget = *budget;
      if (n_initial) cfg.n_initial = *n_initial;
      if (tune_steps) cfg.tune_steps = *tune_steps;
      const std::string prompts_path = tune_prompts.value_or(cfg.paths.validation_prompts);
      require_file(prompts_path, "validation prompts");
      const auto prompts = read_prompts(prompts_path);
      const auto inf = load_inference(cfg, tune_model.value_or(cfg.paths.surrogate),
                                      tune_quantizer.value_or(default_quantizer));
      SearchSpace space = cfg.space;
      space.k = inf.spec.k;
      const ObjectiveContext ctx{prompts, &inf.predictor, &inf.spec, &inf.backends, cfg.seed,
                                 cfg.tune_steps, cfg.workers};
      const TuneOptions opts{cfg.budget, cfg.n_initial, cfg.seed, cfg.xi, cfg.gp};
      const auto result = tune(space, opts, [&](const DeltaVector& d) { return estimate_objective(d, ctx); });
      write_json_file(tune_out.value_or(cfg.paths.delta), to_json(result, inf.spec.k, cfg.seed, cfg.budget));
      out << nlohmann::json{{"best_delta", to_json(result.best_delta)},
                            {"best_value", result.best_value},
                            {"calls_used", result.calls_used}}
                 .dump()
          << '\n';
    } else if (eval->parsed()) {
      if (images_per_prompt) cfg.images_per_prompt = *images_per_prompt;
      const std::string prompts_path = eval_prompts.value_or(cfg.paths.test_prompts);
      require_file(prompts_path, "test prompts");
      const auto prompts = read_prompts(prompts_path);
      const std::string delta_path = eval_delta.value_or(cfg.paths.delta);
      require_file(delta_path, "delta file");
      const auto tuned = tune_result_from_json(read_json_file(delta_path));
      const auto inf = load_inference(cfg, eval_model.value_or(cfg.paths.surrogate),
                                      eval_quantizer.value_or(default_quantizer));
      const EvalContext ctx{&inf.backends, &inf.predictor, &inf.spec, cfg.images_per_prompt,
                            cfg.seed, cfg.eval_steps, cfg.workers};
      std::vector<PolicyEvaluation> evals;
      for (const auto& policy : {Policy::identity(), Policy::unconditional(),
                                 Policy::conditional("capr", tuned.best_delta)}) {
        evals.push_back(evaluate_policy(policy, prompts, ctx));
      }
      const auto rep = compare(evals, {"identity", "unconditional"}, ctx);
      write_json_file(eval_out ? fs::path(*eval_out) : reports_dir / "report.json", to_json(rep));
      for (const auto& c : rep.comparisons) {
        out << c.policy << " vs " << c.baseline << ": mean_diff=" << text::format_double(c.mean_diff)
            << " t=" << text::format_double(c.test.t) << " p=" << text::format_double(c.test.p)
            << (c.significant ? " *" : "") << '\n';
      }
    } else if (sweep->parsed()) {
      if (images_per_prompt) cfg.images_per_prompt = *images_per_prompt;
      const auto frozen_list = parse_int_list(sweep_frozen);
      if (frozen_list.size() != 4) throw UsageError("--frozen needs four integers");
      const DeltaVector frozen{frozen_list[0], frozen_list[1], frozen_list[2], frozen_list[3]};
      const auto values = parse_int_list(sweep_values);
      if (values.empty()) throw UsageError("--values needs at least one integer");
      const std::string prompts_path = sweep_prompts.value_or(cfg.paths.test_prompts);
      require_file(prompts_path, "sweep prompts");
      const auto prompts = read_prompts(prompts_path);
      const auto inf = load_inference(cfg, sweep_model.value_or(cfg.paths.surrogate),
                                      sweep_quantizer.value_or(default_quantizer));
      const EvalContext ctx{&inf.backends, &inf.predictor, &inf.spec, cfg.images_per_prompt,
                            cfg.seed, cfg.eval_steps, cfg.workers};
      const auto factor = parse_sweep_factor(sweep_factor);
      const auto rows = delta_sweep(factor, values, frozen, prompts, ctx);
      std::ostringstream csv;
      write_sweep_csv(rows, factor, frozen, csv);
      write_text(sweep_out ? fs::path(*sweep_out) : reports_dir / "sweep.csv", csv.str());
      out << csv.str();
    } else if (reform->parsed()) {
      const auto inf = load_inference(cfg, reform_model.value_or(cfg.paths.surrogate),
                                      reform_quantizer.value_or(default_quantizer));
      DeltaVector delta = kReferenceDelta;
      const std::string delta_path = reform_delta.value_or(cfg.paths.delta);
      if (reform_delta) require_file(delta_path, "delta file");
      if (fs::exists(delta_path)) delta = tune_result_from_json(read_json_file(delta_path)).best_delta;
      if (!inf.backends.reformulator) throw InvalidArgument("no reformulator backend configured");
      const auto c = target_condition(reform_prompt, inf.predictor, inf.spec, delta);
      out << inf.backends.reformulator->reformulate({reform_prompt, c, render_meta_prompt(reform_prompt, c)})
          << '\n';
    } else if (synth_logs->parsed()) {
      const auto log = synthetic::simulate_log(cfg.lexicon(), {synth_users, synth_sessions, cfg.seed});
      std::vector<nlohmann::json> rows;
      for (const auto& r : log) rows.push_back(to_json(r));
      write_jsonl(synth_logs_out, rows);
      out << nlohmann::json{{"records", rows.size()}}.dump() << '\n';
    } else if (synth_prompts->parsed()) {
      write_prompts(synth_prompts_out, synthetic::sample_prompts(synth_count, cfg.seed, cfg.lexicon()));
      out << nlohmann::json{{"prompts", synth_count}}.dump() << '\n';
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n' << app.help();
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace capr::cli
