#include "capr/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>

#include "capr/error.hpp"
#include "capr/log_store.hpp"

namespace capr {

namespace fs = std::filesystem;

std::size_t resolve_pair_scores(std::vector<ReformulationPair>& pairs, const PromptScorer* scorer) {
  std::size_t unscorable = 0;
  for (auto& p : pairs) {
    try {
      if (!p.initial_scores && scorer) {
        p.initial_scores = (*scorer)(p.initial_prompt, static_cast<std::uint64_t>(p.initial_seed.value_or(0)));
      }
      if (!p.final_scores && scorer) {
        p.final_scores = (*scorer)(p.final_prompt, static_cast<std::uint64_t>(p.final_seed.value_or(0)));
      }
    } catch (const Error&) {
      // left unscored; counted below
    }
    if (!p.initial_scores || !p.final_scores) ++unscorable;
  }
  return unscorable;
}

std::vector<QualityScores> pooled_scores(const std::vector<ReformulationPair>& pairs) {
  std::vector<QualityScores> out;
  for (const auto& p : pairs) {
    if (!p.initial_scores || !p.final_scores) continue;
    out.push_back(*p.initial_scores);
    out.push_back(*p.final_scores);
  }
  return out;
}

TripletBuild build_triplets(const std::vector<ReformulationPair>& pairs, const QuantizerSpec& spec,
                            const PromptScorer* scorer) {
  spec.validate();
  TripletBuild build;
  build.stats.pairs = pairs.size();
  for (const auto& p : pairs) {
    if (phrase_count(p.final_prompt) == 0) {
      ++build.stats.dropped_zero_phrase;
      continue;
    }
    CapabilityCondition condition;
    try {
      condition = build_condition(p, spec, scorer);
    } catch (const Error&) {
      ++build.stats.dropped_unscorable;
      continue;
    }
    build.triplets.push_back({p.initial_prompt, condition, p.final_prompt,
                              render_meta_prompt(p.initial_prompt, condition), p.session_id});
  }
  build.stats.triplets = build.triplets.size();
  if (build.triplets.empty()) {
    throw EmptyCorpusError("empty corpus: all " + std::to_string(pairs.size()) + " pairs dropped (" +
                           std::to_string(build.stats.dropped_unscorable) + " unscorable, " +
                           std::to_string(build.stats.dropped_zero_phrase) + " zero-phrase)");
  }
  return build;
}

std::pair<std::vector<TrainingTriplet>, std::vector<TrainingTriplet>> split(
    const std::vector<TrainingTriplet>& triplets, double val_fraction, std::uint64_t seed) {
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
    throw InvalidArgument("val_fraction must lie strictly between 0 and 1");
  }
  std::set<std::string> ids;
  for (const auto& t : triplets) ids.insert(t.session_id);
  if (ids.size() < 2) throw InvalidArgument("split needs at least 2 sessions");

  // Sorted ids, then Fisher-Yates driven directly by mt19937_64 (whose output
  // sequence is fixed by the standard), so the split is portable.
  std::vector<std::string> order(ids.begin(), ids.end());
  std::mt19937_64 rng(seed);
  for (std::size_t i = order.size() - 1; i > 0; --i) {
    std::swap(order[i], order[rng() % (i + 1)]);
  }
  const auto n = order.size();
  auto n_val = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(n)));
  n_val = std::clamp<std::size_t>(n_val, 1, n - 1);
  const std::set<std::string> val_ids(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));

  std::pair<std::vector<TrainingTriplet>, std::vector<TrainingTriplet>> out;
  for (const auto& t : triplets) {
    (val_ids.count(t.session_id) ? out.second : out.first).push_back(t);
  }
  return out;
}

nlohmann::json to_json(const TrainingTriplet& t) {
  return {{"input", t.rendered_input},
          {"target", t.target_prompt},
          {"meta", {{"session_id", t.session_id}, {"condition", to_json(t.condition)}}}};
}

TrainingTriplet triplet_from_json(const nlohmann::json& j) {
  TrainingTriplet t;
  t.rendered_input = j.at("input").get<std::string>();
  t.target_prompt = j.at("target").get<std::string>();
  t.session_id = j.at("meta").at("session_id").get<std::string>();
  t.condition = condition_from_json(j.at("meta").at("condition"));
  auto parsed = parse_meta_prompt(t.rendered_input);
  if (!parsed) throw InvalidArgument("exported input is not a rendered meta-prompt");
  if (parsed->condition != t.condition) {
    throw InvalidArgument("exported input disagrees with its stored condition");
  }
  t.initial_prompt = parsed->initial_prompt;
  return t;
}

void write_json_file(const fs::path& path, const nlohmann::json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

nlohmann::json read_json_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidArgument("malformed JSON in " + path.string() + ": " + e.what());
  }
}

void export_corpus(const std::vector<TrainingTriplet>& train,
                   const std::vector<TrainingTriplet>& validation, const QuantizerSpec& spec,
                   const CorpusStats& stats, const fs::path& out_dir) {
  if (train.empty()) throw InvalidArgument("refusing to export an empty training split");
  fs::create_directories(out_dir);
  auto rows = [](const std::vector<TrainingTriplet>& ts) {
    std::vector<nlohmann::json> out;
    out.reserve(ts.size());
    for (const auto& t : ts) out.push_back(to_json(t));
    return out;
  };
  write_jsonl(out_dir / "train.jsonl", rows(train));
  write_jsonl(out_dir / "val.jsonl", rows(validation));
  write_json_file(out_dir / "quantizer.json", to_json(spec));
  write_json_file(out_dir / "corpus_manifest.json",
                  {{"pairs", stats.pairs},
                   {"triplets", stats.triplets},
                   {"train", train.size()},
                   {"validation", validation.size()},
                   {"dropped", {{"unscorable", stats.dropped_unscorable},
                                {"zero_phrase", stats.dropped_zero_phrase}}}});
}

std::vector<ScoredPrompt> surrogate_training_set(const std::vector<ReformulationPair>& pairs) {
  std::vector<ScoredPrompt> out;
  std::set<std::string> seen;
  for (const auto& p : pairs) {
    if (!p.initial_scores || !p.final_scores) continue;
    if (seen.insert(p.initial_prompt).second) out.push_back({p.initial_prompt, *p.initial_scores});
    if (seen.insert(p.final_prompt).second) out.push_back({p.final_prompt, *p.final_scores});
  }
  return out;
}

void write_scored_prompts(const fs::path& path, const std::vector<ScoredPrompt>& rows) {
  std::vector<nlohmann::json> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back({{"prompt", r.prompt}, {"scores", to_json(r.scores)}});
  write_jsonl(path, out);
}

std::vector<ScoredPrompt> read_scored_prompts(const fs::path& path) {
  std::vector<ScoredPrompt> out;
  for (const auto& j : read_jsonl(path)) {
    out.push_back({j.at("prompt").get<std::string>(), scores_from_json(j.at("scores"))});
  }
  return out;
}

}  // namespace capr
