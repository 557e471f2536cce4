#include "capr/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "capr/capability.hpp"
#include "capr/error.hpp"
#include "capr/text.hpp"

namespace capr::synthetic {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace

double hash_uniform(std::string_view prompt, std::uint64_t seed) {
  std::uint64_t h = text::fnv1a64(prompt);
  for (int i = 0; i < 8; ++i) {
    h ^= (seed >> (8 * i)) & 0xffU;
    h *= 0x100000001b3ULL;
  }
  h = splitmix64(h);
  // 53 high bits -> [0, 1] -> [-1, 1]
  const double unit = static_cast<double>(h >> 11) / static_cast<double>((1ULL << 53) - 1);
  return 2.0 * unit - 1.0;
}

ImageFeatures features_of(const ImageRef& image) {
  if (!image.features || image.features->size() != 3) {
    throw BackendError("synthetic scorer received a non-synthetic image '" + image.image_id + "'");
  }
  const auto& f = *image.features;
  ImageFeatures out{f[0], f[1], f[2]};
  if (!std::isfinite(out.style_count) || !std::isfinite(out.phrase_count) ||
      !(out.noise >= -1.0 && out.noise <= 1.0)) {
    throw BackendError("synthetic image '" + image.image_id + "' has invalid features");
  }
  return out;
}

QualityScores score_features(const ImageFeatures& f) {
  const double s = f.style_count;
  const double n = f.phrase_count;
  const double u = f.noise;
  QualityScores q;
  q.similarity = clamp01(0.9 - 0.04 * s - 0.02 * std::max(0.0, n - 8.0) + 0.02 * u);
  q.aesthetic = clamp01(0.3 + 0.12 * std::min(s, 5.0) - 0.03 * std::max(0.0, s - 5.0) + 0.02 * u);
  q.overall = 0.5 * q.similarity + 0.5 * q.aesthetic;
  return q;
}

ImageRef Generator::generate(const std::string& prompt, std::uint64_t seed, int /*steps*/) const {
  const double s = static_cast<double>(lexicon_.style_count(prompt));
  const double n = static_cast<double>(phrase_count(prompt));
  const double u = hash_uniform(prompt, seed);
  std::uint64_t id = text::fnv1a64(prompt);
  id = splitmix64(id ^ seed);
  return {"synth-" + text::hex64(id), std::vector<double>{s, n, u}};
}

QualityScores Scorer::score(const std::string& /*prompt*/, const ImageRef& image) const {
  return score_features(features_of(image));
}

int Reformulator::target_style_count(const CapabilityCondition& c) {
  int target = static_cast<int>(std::lround(c.expected.aesthetic / 9.0 * 6.0));
  if (c.expected.similarity >= 8) target = std::min(target, 4);
  return std::max(target, 0);
}

int Reformulator::target_phrase_count(const CapabilityCondition& c) {
  return std::max(1, c.expected.phrase_count);
}

std::string Reformulator::reformulate(std::string_view prompt,
                                      const CapabilityCondition& condition) const {
  const int style_target = target_style_count(condition);
  const auto phrase_target = static_cast<std::size_t>(target_phrase_count(condition));

  auto phrases = text::split_phrases(prompt);
  const auto& terms = lexicon_.style_terms();
  auto present = lexicon_.terms_in(prompt);
  auto style = static_cast<int>(present.size());
  for (std::size_t t = 0; t < terms.size() && style < style_target; ++t) {
    if (std::find(present.begin(), present.end(), t) != present.end()) continue;
    phrases.push_back(terms[t]);
    ++style;
  }

  const auto& fillers = lexicon_.filler_phrases();
  for (std::size_t i = 0; phrases.size() < phrase_target; ++i) {
    phrases.push_back(fillers[i % fillers.size()]);
  }
  // The first original phrase always survives; phrase_target >= 1.
  while (phrases.size() > phrase_target) phrases.pop_back();
  return text::join_phrases(phrases);
}

std::string Reformulator::reformulate(const ReformulationRequest& request) const {
  if (request.condition) return reformulate(request.prompt, *request.condition);
  if (auto parsed = parse_meta_prompt(request.input)) {
    return reformulate(parsed->initial_prompt, parsed->condition);
  }
  return request.input.empty() ? request.prompt : request.input;
}

Backends make_backends(const Lexicon& lexicon) {
  Backends b;
  b.kind = "synthetic";
  b.generator = std::make_shared<Generator>(lexicon);
  b.scorer = std::make_shared<Scorer>();
  b.reformulator = std::make_shared<Reformulator>(lexicon);
  b.similarity = std::make_shared<JaccardSimilarity>();
  return b;
}

}  // namespace capr::synthetic
