#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "capr/backends.hpp"
#include "capr/lexicon.hpp"
#include "capr/types.hpp"

namespace capr::synthetic {

// Content phrases first (a subject plus distinct modifiers), then distinct
// style terms.
struct PromptShape {
  int min_content = 1;
  int max_content = 3;
  int min_style = 0;
  int max_style = 2;
};

std::string sample_prompt(std::mt19937_64& rng, const Lexicon& lexicon, const PromptShape& shape);
std::vector<std::string> sample_prompts(std::size_t count, std::uint64_t seed, const Lexicon& lexicon,
                                        const PromptShape& shape = {});

struct LogOptions {
  std::size_t users = 40;
  std::size_t sessions_per_user = 6;
  std::uint64_t seed = 0;
};

// Users with varying skill refine prompts over short bursts separated by long
// pauses; skilled users converge towards ~5 style terms, others pad with
// extra phrases. Records come out in time order per user.
std::vector<InteractionRecord> simulate_log(const Lexicon& lexicon, const LogOptions& options);

}  // namespace capr::synthetic
