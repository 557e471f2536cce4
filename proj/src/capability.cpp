#include "capr/capability.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "capr/error.hpp"
#include "capr/text.hpp"

namespace capr {

bool QualityScores::finite() const {
  return std::isfinite(overall) && std::isfinite(similarity) && std::isfinite(aesthetic);
}

bool CapabilityCondition::valid(int k) const {
  auto in = [k](int b) { return b >= 0 && b < k; };
  return in(initial.similarity) && in(initial.aesthetic) && in(initial.overall) &&
         in(expected.similarity) && in(expected.aesthetic) && in(expected.overall) &&
         expected.phrase_count >= 0;
}

int phrase_count(std::string_view prompt) {
  return static_cast<int>(text::split_phrases(prompt).size());
}

void QuantizerSpec::validate() const {
  if (k < 2) throw InvalidArgument("quantizer needs K >= 2, got " + std::to_string(k));
  for (const auto* r : {&overall, &similarity, &aesthetic}) {
    if (!(r->max >= r->min) || !std::isfinite(r->min) || !std::isfinite(r->max)) {
      throw InvalidArgument("quantizer feature range must be finite with max >= min");
    }
  }
}

QuantizerSpec fit_quantizer(std::span<const QualityScores> scores, int k) {
  if (scores.empty()) throw InvalidArgument("cannot fit a quantizer on an empty score list");
  QuantizerSpec spec;
  spec.k = k;
  auto widen = [](FeatureRange& r, double v, bool first) {
    if (first) {
      r = {v, v};
    } else {
      r.min = std::min(r.min, v);
      r.max = std::max(r.max, v);
    }
  };
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const auto& s = scores[i];
    if (!s.finite()) throw InvalidArgument("non-finite score in quantizer corpus");
    widen(spec.overall, s.overall, i == 0);
    widen(spec.similarity, s.similarity, i == 0);
    widen(spec.aesthetic, s.aesthetic, i == 0);
  }
  spec.validate();
  return spec;
}

int quantize(double value, FeatureRange range, int k) {
  if (range.max == range.min) return 0;
  if (std::isnan(value)) return 0;
  const double scaled = std::floor((value - range.min) / (range.max - range.min) * k);
  if (scaled <= 0.0) return 0;
  if (scaled >= k - 1) return k - 1;
  return static_cast<int>(scaled);
}

ScoreBins quantize(const QualityScores& scores, const QuantizerSpec& spec) {
  return {quantize(scores.similarity, spec.similarity, spec.k),
          quantize(scores.aesthetic, spec.aesthetic, spec.k),
          quantize(scores.overall, spec.overall, spec.k)};
}

QualityScores score_prompt(const std::string& prompt, std::span<const ImageRef> images,
                           const ScorerBackend& scorer) {
  if (images.empty()) throw InvalidArgument("score_prompt needs at least one image");
  QualityScores sum;
  for (const auto& image : images) {
    QualityScores s;
    try {
      s = scorer.score(prompt, image);
    } catch (const BackendError& e) {
      throw BackendError(e.endpoint(), e.status(),
                         "scoring prompt '" + prompt + "' failed: " + e.what());
    }
    sum.overall += s.overall;
    sum.similarity += s.similarity;
    sum.aesthetic += s.aesthetic;
  }
  const auto n = static_cast<double>(images.size());
  return {sum.overall / n, sum.similarity / n, sum.aesthetic / n};
}

PromptScorer::PromptScorer(const GeneratorBackend& generator, const ScorerBackend& scorer,
                           int images_per_prompt, int steps)
    : generator_(generator), scorer_(scorer), images_per_prompt_(images_per_prompt), steps_(steps) {
  if (images_per_prompt < 1) throw InvalidArgument("images_per_prompt must be >= 1");
}

QualityScores PromptScorer::operator()(const std::string& prompt, std::uint64_t base_seed) const {
  std::vector<ImageRef> images;
  images.reserve(static_cast<std::size_t>(images_per_prompt_));
  for (int i = 0; i < images_per_prompt_; ++i) {
    images.push_back(generator_.generate(prompt, base_seed + static_cast<std::uint64_t>(i), steps_));
  }
  return score_prompt(prompt, images, scorer_);
}

CapabilityCondition build_condition(const ReformulationPair& pair, const QuantizerSpec& spec,
                                    const PromptScorer* scorer) {
  const int phrases = phrase_count(pair.final_prompt);
  if (phrases == 0) throw InvalidArgument("final prompt has no phrases: '" + pair.final_prompt + "'");
  auto resolve = [&](const std::optional<QualityScores>& given, const std::string& prompt,
                     const std::optional<std::int64_t>& seed) {
    if (given) return *given;
    if (!scorer) throw InvalidArgument("no scores and no scorer for prompt '" + prompt + "'");
    return (*scorer)(prompt, static_cast<std::uint64_t>(seed.value_or(0)));
  };
  const auto initial = resolve(pair.initial_scores, pair.initial_prompt, pair.initial_seed);
  const auto final_scores = resolve(pair.final_scores, pair.final_prompt, pair.final_seed);
  const auto fb = quantize(final_scores, spec);
  return {quantize(initial, spec), {fb.similarity, fb.aesthetic, fb.overall, phrases}};
}

namespace {

constexpr std::string_view kPrefix = "Original prompt: ";
constexpr std::string_view kTemplate[] = {
    "A text-to-image generation system transforms text prompts into visual images. "
    "The effectiveness of this conversion depends on the prompt. "
    "The original prompt leads to images with prompt-image similarity of ",
    ", aesthetic quality of ",
    ", and overall quality of ",
    ". To improve these metrics, new images are generated based on a revised prompt. "
    "After evaluating the new images for the initial prompt, the updated scores are: "
    "prompt-image similarity of ",
    ", aesthetic quality of ",
    ", and overall quality of ",
    ". The revised prompt is structured into ",
    " phrases, each separated by a comma. "
    "Considering the given information, the revised prompt should be:",
};

bool consume(std::string_view& rest, std::string_view literal) {
  if (rest.substr(0, literal.size()) != literal) return false;
  rest.remove_prefix(literal.size());
  return true;
}

bool consume_int(std::string_view& rest, int& out) {
  std::size_t n = 0;
  if (n < rest.size() && rest[n] == '-') ++n;
  const std::size_t digits_start = n;
  while (n < rest.size() && rest[n] >= '0' && rest[n] <= '9' && n < 10) ++n;
  if (n == digits_start) return false;
  out = std::stoi(std::string(rest.substr(0, n)));
  rest.remove_prefix(n);
  return true;
}

}  // namespace

std::string render_meta_prompt(std::string_view initial_prompt, const CapabilityCondition& c) {
  const int slots[7] = {c.initial.similarity,  c.initial.aesthetic,  c.initial.overall,
                        c.expected.similarity, c.expected.aesthetic, c.expected.overall,
                        c.expected.phrase_count};
  std::string out;
  out += kPrefix;
  out += initial_prompt;
  out += '\n';
  for (int i = 0; i < 7; ++i) {
    out += kTemplate[i];
    out += std::to_string(slots[i]);
  }
  out += kTemplate[7];
  return out;
}

std::optional<ParsedMetaPrompt> parse_meta_prompt(std::string_view text) {
  std::string_view rest = text;
  if (!consume(rest, kPrefix)) return std::nullopt;
  const auto newline = rest.find('\n');
  if (newline == std::string_view::npos) return std::nullopt;
  ParsedMetaPrompt parsed;
  parsed.initial_prompt = std::string(rest.substr(0, newline));
  rest.remove_prefix(newline + 1);
  int v[7];
  for (int i = 0; i < 7; ++i) {
    if (!consume(rest, kTemplate[i]) || !consume_int(rest, v[i])) return std::nullopt;
  }
  if (!consume(rest, kTemplate[7]) || !rest.empty()) return std::nullopt;
  parsed.condition = {{v[0], v[1], v[2]}, {v[3], v[4], v[5], v[6]}};
  return parsed;
}

nlohmann::json to_json(const QualityScores& s) {
  return {{"overall", s.overall}, {"similarity", s.similarity}, {"aesthetic", s.aesthetic}};
}

QualityScores scores_from_json(const nlohmann::json& j) {
  QualityScores s{j.at("overall").get<double>(), j.at("similarity").get<double>(),
                  j.at("aesthetic").get<double>()};
  if (!s.finite()) throw InvalidArgument("non-finite quality score");
  return s;
}

nlohmann::json to_json(const QuantizerSpec& spec) {
  auto range = [](const FeatureRange& r) { return nlohmann::json{{"min", r.min}, {"max", r.max}}; };
  return {{"k", spec.k},
          {"features",
           {{"overall", range(spec.overall)},
            {"similarity", range(spec.similarity)},
            {"aesthetic", range(spec.aesthetic)}}}};
}

QuantizerSpec quantizer_from_json(const nlohmann::json& j) {
  auto range = [](const nlohmann::json& r) {
    return FeatureRange{r.at("min").get<double>(), r.at("max").get<double>()};
  };
  const auto& f = j.at("features");
  QuantizerSpec spec{j.at("k").get<int>(), range(f.at("overall")), range(f.at("similarity")),
                     range(f.at("aesthetic"))};
  spec.validate();
  return spec;
}

nlohmann::json to_json(const CapabilityCondition& c) {
  return {{"initial",
           {{"similarity", c.initial.similarity},
            {"aesthetic", c.initial.aesthetic},
            {"overall", c.initial.overall}}},
          {"expected",
           {{"similarity", c.expected.similarity},
            {"aesthetic", c.expected.aesthetic},
            {"overall", c.expected.overall},
            {"phrase_count", c.expected.phrase_count}}}};
}

CapabilityCondition condition_from_json(const nlohmann::json& j) {
  const auto& i = j.at("initial");
  const auto& e = j.at("expected");
  return {{i.at("similarity").get<int>(), i.at("aesthetic").get<int>(), i.at("overall").get<int>()},
          {e.at("similarity").get<int>(), e.at("aesthetic").get<int>(), e.at("overall").get<int>(),
           e.at("phrase_count").get<int>()}};
}

}  // namespace capr
