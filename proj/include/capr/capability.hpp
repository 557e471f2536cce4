#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include <json.hpp>

#include "capr/backends.hpp"
#include "capr/types.hpp"

namespace capr {

inline constexpr int kDefaultBins = 10;

// Number of non-empty comma-separated phrases.
int phrase_count(std::string_view prompt);

struct FeatureRange {
  double min = 0.0;
  double max = 0.0;
  bool operator==(const FeatureRange&) const = default;
};

// Per-feature corpus extrema and bucket count K.
struct QuantizerSpec {
  int k = kDefaultBins;
  FeatureRange overall;
  FeatureRange similarity;
  FeatureRange aesthetic;

  void validate() const;
  bool operator==(const QuantizerSpec&) const = default;
};

QuantizerSpec fit_quantizer(std::span<const QualityScores> scores, int k = kDefaultBins);

// floor((value - min) / (max - min) * K) clamped to [0, K-1]; 0 when the
// range is degenerate.
int quantize(double value, FeatureRange range, int k);
ScoreBins quantize(const QualityScores& scores, const QuantizerSpec& spec);

// Arithmetic mean of the backend's scores over `images`.
QualityScores score_prompt(const std::string& prompt, std::span<const ImageRef> images,
                           const ScorerBackend& scorer);

// Generate-then-score: renders `images_per_prompt` images with consecutive
// seeds starting at `base_seed` and averages their scores.
class PromptScorer {
 public:
  PromptScorer(const GeneratorBackend& generator, const ScorerBackend& scorer,
               int images_per_prompt = 1, int steps = 50);

  QualityScores operator()(const std::string& prompt, std::uint64_t base_seed = 0) const;

 private:
  const GeneratorBackend& generator_;
  const ScorerBackend& scorer_;
  int images_per_prompt_;
  int steps_;
};

// Throws InvalidArgument when the final prompt has no phrases or scores are
// unavailable and no scorer is given.
CapabilityCondition build_condition(const ReformulationPair& pair, const QuantizerSpec& spec,
                                    const PromptScorer* scorer = nullptr);

std::string render_meta_prompt(std::string_view initial_prompt, const CapabilityCondition& condition);

struct ParsedMetaPrompt {
  std::string initial_prompt;
  CapabilityCondition condition;
};

// Inverse of render_meta_prompt; nullopt if `text` is not a rendered meta-prompt.
std::optional<ParsedMetaPrompt> parse_meta_prompt(std::string_view text);

nlohmann::json to_json(const QualityScores& s);
QualityScores scores_from_json(const nlohmann::json& j);
nlohmann::json to_json(const QuantizerSpec& spec);
QuantizerSpec quantizer_from_json(const nlohmann::json& j);
nlohmann::json to_json(const CapabilityCondition& c);
CapabilityCondition condition_from_json(const nlohmann::json& j);

}  // namespace capr
