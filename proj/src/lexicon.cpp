#include "capr/lexicon.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "capr/error.hpp"
#include "capr/text.hpp"

namespace capr {

Lexicon::Lexicon(std::vector<std::string> style_terms, std::vector<std::string> filler_phrases)
    : style_terms_(std::move(style_terms)), filler_phrases_(std::move(filler_phrases)) {
  if (filler_phrases_.empty()) throw InvalidArgument("lexicon needs at least one filler phrase");
  for (const auto& term : style_terms_) {
    auto toks = text::word_tokens(term);
    if (toks.empty()) throw InvalidArgument("lexicon style term without words: '" + term + "'");
    term_tokens_.push_back(std::move(toks));
  }
}

Lexicon Lexicon::builtin() {
  return Lexicon(
      {"digital art", "artstation", "by greg rutkowski", "highly detailed", "concept art",
       "octane render", "4k", "sharp focus", "unreal engine", "cinematic lighting",
       "matte painting", "by artgerm"},
      {"full view", "centered composition", "soft background", "natural colors", "daytime scene",
       "simple shapes", "clear outline", "calm mood", "balanced framing", "eye level shot",
       "plain backdrop", "wide angle"});
}

Lexicon Lexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open lexicon file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
    return Lexicon(j.at("style_terms").get<std::vector<std::string>>(),
                   j.at("filler_phrases").get<std::vector<std::string>>());
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument("malformed lexicon file " + path.string() + ": " + e.what());
  }
}

std::vector<std::size_t> Lexicon::terms_in(std::string_view prompt) const {
  std::vector<bool> hit(style_terms_.size(), false);
  for (const auto& phrase : text::split_phrases(prompt)) {
    const auto words = text::word_tokens(phrase);
    for (std::size_t t = 0; t < term_tokens_.size(); ++t) {
      if (hit[t]) continue;
      const auto& needle = term_tokens_[t];
      hit[t] = std::search(words.begin(), words.end(), needle.begin(), needle.end()) != words.end();
    }
  }
  std::vector<std::size_t> out;
  for (std::size_t t = 0; t < hit.size(); ++t) {
    if (hit[t]) out.push_back(t);
  }
  return out;
}

std::uint64_t Lexicon::hash() const {
  std::uint64_t h = text::fnv1a64("lexicon/v1\n");
  for (const auto& t : style_terms_) h = text::fnv1a64(t + "\n", h);
  h = text::fnv1a64("\x1e", h);
  for (const auto& f : filler_phrases_) h = text::fnv1a64(f + "\n", h);
  return h;
}

}  // namespace capr
