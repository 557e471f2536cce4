#include "capr/config.hpp"

#include "capr/corpus.hpp"
#include "capr/error.hpp"
#include "capr/synthetic.hpp"

namespace capr {

namespace {

template <typename T>
void take(const nlohmann::json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end() && !it->is_null()) out = it->get<T>();
}

void take_bounds(const nlohmann::json& j, const char* key, IntBounds& out) {
  if (auto it = j.find(key); it != j.end() && !it->is_null()) {
    const auto v = it->get<std::vector<int>>();
    if (v.size() != 2) throw InvalidArgument(std::string("bounds for ") + key + " need [lo, hi]");
    out = {v[0], v[1]};
  }
}

const nlohmann::json& section(const nlohmann::json& j, const char* key) {
  static const nlohmann::json empty = nlohmann::json::object();
  auto it = j.find(key);
  return it == j.end() || it->is_null() ? empty : *it;
}

}  // namespace

RunConfig config_from_json(const nlohmann::json& j) {
  RunConfig c;
  try {
    take(j, "backend", c.backend);
    const auto& ep = section(j, "endpoints");
    take(ep, "generate", c.endpoints.generate);
    take(ep, "score", c.endpoints.score);
    take(ep, "similarity", c.endpoints.similarity);
    take(ep, "reformulate", c.endpoints.reformulate);
    take(j, "timeout_seconds", c.remote.timeout_seconds);
    take(j, "retries", c.remote.max_attempts);
    take(j, "backoff_seconds", c.remote.backoff_seconds);
    take(j, "lexicon_path", c.lexicon_path);

    take(section(j, "quantizer"), "k", c.k);
    c.space = SearchSpace::defaults(c.k);
    const auto& seg = section(j, "segmentation");
    take(seg, "gap_seconds", c.gap_seconds);
    take(seg, "sim_threshold", c.sim_threshold);

    const auto& corpus = section(j, "corpus");
    take(corpus, "val_fraction", c.val_fraction);
    take(corpus, "images_per_prompt", c.corpus_images_per_prompt);
    take(section(j, "surrogate"), "lambda", c.ridge_lambda);

    const auto& tuner = section(j, "tuner");
    take(tuner, "budget", c.budget);
    take(tuner, "n_initial", c.n_initial);
    take(tuner, "xi", c.xi);
    take(tuner, "steps", c.tune_steps);
    const auto& bounds = section(tuner, "bounds");
    take_bounds(bounds, "overall", c.space.overall);
    take_bounds(bounds, "similarity", c.space.similarity);
    take_bounds(bounds, "aesthetic", c.space.aesthetic);
    take_bounds(bounds, "length", c.space.length);
    const auto& gp = section(tuner, "gp");
    take(gp, "length_scale", c.gp.length_scale);
    take(gp, "signal_variance", c.gp.signal_variance);
    take(gp, "noise_variance", c.gp.noise_variance);

    const auto& ev = section(j, "evaluation");
    take(ev, "images_per_prompt", c.images_per_prompt);
    take(ev, "steps", c.eval_steps);

    const auto& p = section(j, "paths");
    take(p, "store", c.paths.store);
    take(p, "sessions", c.paths.sessions);
    take(p, "pairs", c.paths.pairs);
    take(p, "corpus", c.paths.corpus);
    take(p, "surrogate", c.paths.surrogate);
    take(p, "delta", c.paths.delta);
    take(p, "reports", c.paths.reports);
    take(p, "validation_prompts", c.paths.validation_prompts);
    take(p, "test_prompts", c.paths.test_prompts);

    take(j, "workers", c.workers);
    take(j, "seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed config: ") + e.what());
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) { return config_from_json(read_json_file(path)); }

void RunConfig::validate() const {
  if (backend != "synthetic" && backend != "remote") {
    throw InvalidArgument("backend must be 'synthetic' or 'remote', got '" + backend + "'");
  }
  if (k < 2) throw InvalidArgument("quantizer K must be >= 2");
  if (gap_seconds <= 0) throw InvalidArgument("gap_seconds must be > 0");
  if (!(sim_threshold >= 0.0 && sim_threshold <= 1.0)) throw InvalidArgument("sim_threshold must lie in [0, 1]");
  if (images_per_prompt < 1 || corpus_images_per_prompt < 1) {
    throw InvalidArgument("images_per_prompt must be >= 1");
  }
  if (workers < 1) throw InvalidArgument("workers must be >= 1");
  space.validate();
}

Lexicon RunConfig::lexicon() const {
  return lexicon_path.empty() ? Lexicon::builtin() : Lexicon::load(lexicon_path);
}

Backends RunConfig::backends() const {
  if (backend == "synthetic") return synthetic::make_backends(lexicon());
  auto b = remote::make_backends(endpoints, remote);
  if (!b.similarity) b.similarity = std::make_shared<JaccardSimilarity>();
  return b;
}

nlohmann::json to_json(const RunConfig& c) {
  auto bounds = [](const IntBounds& b) { return nlohmann::json::array({b.lo, b.hi}); };
  return {{"backend", c.backend},
          {"endpoints",
           {{"generate", c.endpoints.generate},
            {"score", c.endpoints.score},
            {"similarity", c.endpoints.similarity},
            {"reformulate", c.endpoints.reformulate}}},
          {"timeout_seconds", c.remote.timeout_seconds},
          {"retries", c.remote.max_attempts},
          {"backoff_seconds", c.remote.backoff_seconds},
          {"lexicon_path", c.lexicon_path},
          {"quantizer", {{"k", c.k}}},
          {"segmentation", {{"gap_seconds", c.gap_seconds}, {"sim_threshold", c.sim_threshold}}},
          {"corpus", {{"val_fraction", c.val_fraction}, {"images_per_prompt", c.corpus_images_per_prompt}}},
          {"surrogate", {{"lambda", c.ridge_lambda}}},
          {"tuner",
           {{"budget", c.budget},
            {"n_initial", c.n_initial},
            {"xi", c.xi},
            {"steps", c.tune_steps},
            {"bounds",
             {{"overall", bounds(c.space.overall)},
              {"similarity", bounds(c.space.similarity)},
              {"aesthetic", bounds(c.space.aesthetic)},
              {"length", bounds(c.space.length)}}},
            {"gp",
             {{"length_scale", c.gp.length_scale},
              {"signal_variance", c.gp.signal_variance},
              {"noise_variance", c.gp.noise_variance}}}}},
          {"evaluation", {{"images_per_prompt", c.images_per_prompt}, {"steps", c.eval_steps}}},
          {"paths",
           {{"store", c.paths.store},
            {"sessions", c.paths.sessions},
            {"pairs", c.paths.pairs},
            {"corpus", c.paths.corpus},
            {"surrogate", c.paths.surrogate},
            {"delta", c.paths.delta},
            {"reports", c.paths.reports},
            {"validation_prompts", c.paths.validation_prompts},
            {"test_prompts", c.paths.test_prompts}}},
          {"workers", c.workers},
          {"seed", c.seed}};
}

}  // namespace capr
