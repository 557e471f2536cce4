#pragma once

// Deterministic stand-ins for the generator, the scorer suite and the
// conditional reformulator. Scores depend only on the number of distinct
// style terms s, the phrase count n and a per-(prompt, seed) noise u, which
// gives the delta tuner a landscape with an interior optimum.

#include <cstdint>
#include <string>
#include <string_view>

#include "capr/backends.hpp"
#include "capr/lexicon.hpp"

namespace capr::synthetic {

// Fixed 64-bit hash of (prompt, seed) mapped affinely onto [-1, 1].
double hash_uniform(std::string_view prompt, std::uint64_t seed);

struct ImageFeatures {
  double style_count = 0.0;
  double phrase_count = 0.0;
  double noise = 0.0;
};

ImageFeatures features_of(const ImageRef& image);  // BackendError unless synthetic
QualityScores score_features(const ImageFeatures& f);

class Generator final : public GeneratorBackend {
 public:
  explicit Generator(Lexicon lexicon) : lexicon_(std::move(lexicon)) {}
  // `steps` is accepted and ignored.
  ImageRef generate(const std::string& prompt, std::uint64_t seed, int steps) const override;

 private:
  Lexicon lexicon_;
};

class Scorer final : public ScorerBackend {
 public:
  QualityScores score(const std::string& prompt, const ImageRef& image) const override;
  bool accepts_image_ids() const override { return false; }
};

// Honors a K=10 condition exactly: targets round(aesthetic/9 * 6) style terms
// (at most 4 when the expected similarity bin is >= 8) and exactly
// max(1, phrase_count) phrases. Unconditioned requests are parsed as rendered
// meta-prompts; anything else comes back unchanged.
class Reformulator final : public ReformulatorBackend {
 public:
  explicit Reformulator(Lexicon lexicon) : lexicon_(std::move(lexicon)) {}
  std::string reformulate(const ReformulationRequest& request) const override;
  std::string reformulate(std::string_view prompt, const CapabilityCondition& condition) const;

  static int target_style_count(const CapabilityCondition& condition);
  static int target_phrase_count(const CapabilityCondition& condition);

 private:
  Lexicon lexicon_;
};

Backends make_backends(const Lexicon& lexicon);

}  // namespace capr::synthetic
