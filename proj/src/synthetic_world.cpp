#include "capr/synthetic_world.hpp"

#include <algorithm>
#include <cmath>

#include "capr/error.hpp"
#include "capr/text.hpp"

namespace capr::synthetic {

namespace {

const std::vector<std::string>& subjects() {
  static const std::vector<std::string> v = {
      "a cat",           "an old lighthouse",  "a red fox",       "portrait of a sailor",
      "a castle on a hill", "a futuristic city", "a bowl of fruit", "a dragon",
      "a forest path",   "a robot",            "a mountain lake", "a steam train",
      "a samurai",       "a wizard tower",     "a sunflower field", "a space station",
      "a knight",        "a coral reef",       "a desert caravan", "a snowy village",
      "an owl",          "a jazz musician",    "a pirate ship",   "a crystal cave",
      "a tiger",         "a cozy cabin",       "a market street", "a whale",
      "an astronaut",    "a ballerina"};
  return v;
}

const std::vector<std::string>& modifiers() {
  static const std::vector<std::string> v = {
      "at sunset",      "in the rain",      "wearing a hat",      "under the stars",
      "in winter",      "made of glass",    "surrounded by flowers", "in a misty valley",
      "with a lantern", "on a rooftop",     "by the sea",         "at night",
      "in spring",      "with golden light", "in a small room",   "reading a book",
      "in the clouds",  "near a river",     "on a wooden table",  "in autumn"};
  return v;
}

std::size_t draw(std::mt19937_64& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

int draw_between(std::mt19937_64& rng, int lo, int hi) {
  return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

double draw_unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// k distinct indices from [0, n) in draw order.
std::vector<std::size_t> distinct(std::mt19937_64& rng, std::size_t n, std::size_t k) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  k = std::min(k, n);
  for (std::size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + draw(rng, n - i)]);
  idx.resize(k);
  return idx;
}

std::vector<std::string> base_phrases(std::mt19937_64& rng, const Lexicon& lexicon,
                                      const PromptShape& shape) {
  if (shape.min_content < 1 || shape.max_content < shape.min_content || shape.min_style < 0 ||
      shape.max_style < shape.min_style) {
    throw InvalidArgument("invalid prompt shape");
  }
  const int content = draw_between(rng, shape.min_content, shape.max_content);
  const int style = draw_between(rng, shape.min_style, shape.max_style);
  std::vector<std::string> phrases{subjects()[draw(rng, subjects().size())]};
  for (auto i : distinct(rng, modifiers().size(), static_cast<std::size_t>(content - 1))) {
    phrases.push_back(modifiers()[i]);
  }
  for (auto i : distinct(rng, lexicon.style_terms().size(), static_cast<std::size_t>(style))) {
    phrases.push_back(lexicon.style_terms()[i]);
  }
  return phrases;
}

}  // namespace

std::string sample_prompt(std::mt19937_64& rng, const Lexicon& lexicon, const PromptShape& shape) {
  return text::join_phrases(base_phrases(rng, lexicon, shape));
}

std::vector<std::string> sample_prompts(std::size_t count, std::uint64_t seed, const Lexicon& lexicon,
                                        const PromptShape& shape) {
  std::mt19937_64 rng(seed);
  std::vector<std::string> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(sample_prompt(rng, lexicon, shape));
  return out;
}

std::vector<InteractionRecord> simulate_log(const Lexicon& lexicon, const LogOptions& options) {
  std::mt19937_64 rng(options.seed);
  std::vector<InteractionRecord> log;
  const PromptShape shape{1, 2, 0, 2};
  for (std::size_t u = 0; u < options.users; ++u) {
    const std::string user = "user" + std::to_string(u);
    const double skill = draw_unit(rng);
    std::int64_t clock = 1'650'000'000 + static_cast<std::int64_t>(draw(rng, 86'400));
    std::size_t subject_offset = draw(rng, subjects().size());
    for (std::size_t s = 0; s < options.sessions_per_user; ++s) {
      auto phrases = base_phrases(rng, lexicon, shape);
      // Rotate subjects so consecutive sessions of a user differ in topic.
      phrases[0] = subjects()[(subject_offset + s * 7) % subjects().size()];
      const int steps = draw_between(rng, 1, 4);
      const int style_goal = static_cast<int>(std::lround(1.0 + 4.5 * skill));
      for (int step = 0; step <= steps; ++step) {
        if (step > 0) {
          const auto present = lexicon.terms_in(text::join_phrases(phrases));
          const bool refine_style = draw_unit(rng) < skill;
          if (refine_style && static_cast<int>(present.size()) < style_goal) {
            for (std::size_t t = 0; t < lexicon.style_terms().size(); ++t) {
              const std::size_t pick = (t + draw(rng, lexicon.style_terms().size())) %
                                       lexicon.style_terms().size();
              if (std::find(present.begin(), present.end(), pick) == present.end()) {
                phrases.push_back(lexicon.style_terms()[pick]);
                break;
              }
            }
          } else if (draw_unit(rng) < 0.5 && phrases.size() > 1) {
            phrases.pop_back();
          } else if (draw_unit(rng) < 0.5) {
            phrases.push_back(modifiers()[draw(rng, modifiers().size())]);
          } else {
            phrases.push_back(lexicon.filler_phrases()[draw(rng, lexicon.filler_phrases().size())]);
          }
          clock += draw_between(rng, 20, 900);
        }
        InteractionRecord r;
        r.user_id = user;
        r.timestamp = clock;
        r.prompt = text::join_phrases(phrases);
        r.seed = static_cast<std::int64_t>(draw(rng, 1u << 20));
        r.image_id = "img-" + user + "-" + std::to_string(log.size());
        log.push_back(std::move(r));
      }
      clock += draw_between(rng, 1'500, 20'000);
    }
  }
  return log;
}

}  // namespace capr::synthetic
