#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace capr {

// Raw scorer outputs for one (prompt, image) or averaged over several images.
struct QualityScores {
  double overall = 0.0;     // likelihood of user satisfaction
  double similarity = 0.0;  // prompt-image coherence
  double aesthetic = 0.0;   // visual appeal

  bool finite() const;
  bool operator==(const QualityScores&) const = default;
};

// Quantized (similarity, aesthetic, overall) triple, each in [0, K-1].
struct ScoreBins {
  int similarity = 0;
  int aesthetic = 0;
  int overall = 0;

  bool operator==(const ScoreBins&) const = default;
};

struct ExpectedBins {
  int similarity = 0;
  int aesthetic = 0;
  int overall = 0;
  int phrase_count = 0;

  bool operator==(const ExpectedBins&) const = default;
};

// (c', c''): quantized quality of the initial prompt and the quality the
// reformulation is expected to reach, plus its phrase count.
struct CapabilityCondition {
  ScoreBins initial;
  ExpectedBins expected;

  bool valid(int k) const;
  bool operator==(const CapabilityCondition&) const = default;
};

struct ImageRef {
  std::string image_id;
  // Synthetic images carry {style_count, phrase_count, noise_u}.
  std::optional<std::vector<double>> features;
};

struct InteractionRecord {
  std::string user_id;
  std::int64_t timestamp = 0;
  std::string prompt;
  std::optional<std::string> image_id;
  std::optional<QualityScores> scores;
  std::optional<std::int64_t> seed;

  bool operator==(const InteractionRecord&) const = default;
};

struct Session {
  std::string session_id;
  std::string user_id;
  std::vector<InteractionRecord> records;
};

struct ReformulationPair {
  std::string initial_prompt;
  std::string final_prompt;
  std::string session_id;
  std::optional<QualityScores> initial_scores;
  std::optional<QualityScores> final_scores;
  std::optional<std::int64_t> initial_seed;
  std::optional<std::int64_t> final_seed;
};

}  // namespace capr
