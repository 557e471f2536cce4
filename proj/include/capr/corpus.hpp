#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "capr/capability.hpp"
#include "capr/types.hpp"

namespace capr {

// (p, c, p_hat) with the rendered meta-prompt the external trainer consumes.
struct TrainingTriplet {
  std::string initial_prompt;
  CapabilityCondition condition;
  std::string target_prompt;
  std::string rendered_input;
  std::string session_id;

  bool operator==(const TrainingTriplet&) const = default;
};

struct CorpusStats {
  std::size_t pairs = 0;
  std::size_t triplets = 0;
  std::size_t dropped_unscorable = 0;
  std::size_t dropped_zero_phrase = 0;
};

// Fills missing pair scores through `scorer` (seeded by the record seeds).
// Pairs that stay unscorable keep empty scores. Returns the number of pairs
// that could not be scored.
std::size_t resolve_pair_scores(std::vector<ReformulationPair>& pairs, const PromptScorer* scorer);

// Pooled initial and final scores of every fully scored pair.
std::vector<QualityScores> pooled_scores(const std::vector<ReformulationPair>& pairs);

struct TripletBuild {
  std::vector<TrainingTriplet> triplets;
  CorpusStats stats;
};

// One triplet per pair whose prompts are scorable and whose target has at
// least one phrase. Throws EmptyCorpusError if every pair is dropped.
TripletBuild build_triplets(const std::vector<ReformulationPair>& pairs, const QuantizerSpec& spec,
                            const PromptScorer* scorer = nullptr);

// Session-level split after a seeded shuffle of the distinct session ids.
std::pair<std::vector<TrainingTriplet>, std::vector<TrainingTriplet>> split(
    const std::vector<TrainingTriplet>& triplets, double val_fraction, std::uint64_t seed);

// {input, target, meta: {session_id, condition}}
nlohmann::json to_json(const TrainingTriplet& t);
TrainingTriplet triplet_from_json(const nlohmann::json& j);

// Writes train.jsonl, val.jsonl, quantizer.json and corpus_manifest.json.
void export_corpus(const std::vector<TrainingTriplet>& train,
                   const std::vector<TrainingTriplet>& validation, const QuantizerSpec& spec,
                   const CorpusStats& stats, const std::filesystem::path& out_dir);

struct ScoredPrompt {
  std::string prompt;
  QualityScores scores;
};

// Distinct initial and final prompts of the scored pairs, first occurrence wins.
std::vector<ScoredPrompt> surrogate_training_set(const std::vector<ReformulationPair>& pairs);
void write_scored_prompts(const std::filesystem::path& path, const std::vector<ScoredPrompt>& rows);
std::vector<ScoredPrompt> read_scored_prompts(const std::filesystem::path& path);

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace capr
