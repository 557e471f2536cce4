#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace capr {

// Ordered style vocabulary plus neutral filler phrases. The synthetic
// generator counts style terms, the synthetic reformulator appends them, and
// the surrogate uses them as a feature.
class Lexicon {
 public:
  Lexicon(std::vector<std::string> style_terms, std::vector<std::string> filler_phrases);

  // Same contents as data/lexicon.json.
  static Lexicon builtin();
  static Lexicon load(const std::filesystem::path& path);

  const std::vector<std::string>& style_terms() const { return style_terms_; }
  const std::vector<std::string>& filler_phrases() const { return filler_phrases_; }

  // Indices of the distinct style terms occurring inside any single
  // comma-separated phrase of `prompt`, matched as contiguous word tokens.
  std::vector<std::size_t> terms_in(std::string_view prompt) const;
  std::size_t style_count(std::string_view prompt) const { return terms_in(prompt).size(); }

  // FNV-1a over the ordered term and filler lists.
  std::uint64_t hash() const;

  bool operator==(const Lexicon&) const = default;

 private:
  std::vector<std::string> style_terms_;
  std::vector<std::string> filler_phrases_;
  std::vector<std::vector<std::string>> term_tokens_;
};

}  // namespace capr
