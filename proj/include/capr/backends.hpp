#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "capr/types.hpp"

namespace capr {

class GeneratorBackend {
 public:
  virtual ~GeneratorBackend() = default;
  // `steps` is the denoising budget; fewer steps trade fidelity for speed.
  virtual ImageRef generate(const std::string& prompt, std::uint64_t seed, int steps) const = 0;
};

class ScorerBackend {
 public:
  virtual ~ScorerBackend() = default;
  virtual QualityScores score(const std::string& prompt, const ImageRef& image) const = 0;
  // Whether an image known only by its id (e.g. from a log) can be scored.
  virtual bool accepts_image_ids() const { return true; }
};

struct ReformulationRequest {
  std::string prompt;
  std::optional<CapabilityCondition> condition;
  // What a text-in/text-out service sees: the rendered meta-prompt when
  // conditioned, otherwise the raw prompt.
  std::string input;
};

class ReformulatorBackend {
 public:
  virtual ~ReformulatorBackend() = default;
  virtual std::string reformulate(const ReformulationRequest& request) const = 0;
};

// sim(a, b) in [0, 1], symmetric, sim(t, t) = 1 for non-empty t.
class TextSimilarity {
 public:
  virtual ~TextSimilarity() = default;
  virtual double similarity(std::string_view a, std::string_view b) const = 0;
};

// Token-set Jaccard over lowercase whitespace tokens.
class JaccardSimilarity final : public TextSimilarity {
 public:
  double similarity(std::string_view a, std::string_view b) const override;
};

struct Backends {
  std::string kind;  // "synthetic" or "remote"
  std::shared_ptr<const GeneratorBackend> generator;
  std::shared_ptr<const ScorerBackend> scorer;
  std::shared_ptr<const ReformulatorBackend> reformulator;
  std::shared_ptr<const TextSimilarity> similarity;
};

}  // namespace capr
