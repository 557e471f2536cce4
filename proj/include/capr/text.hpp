#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace capr::text {

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);
bool is_blank(std::string_view s);

// Comma-separated phrases, trimmed, empty segments dropped.
std::vector<std::string> split_phrases(std::string_view prompt);
std::string join_phrases(const std::vector<std::string>& phrases);

// Lowercase whitespace tokens, punctuation kept.
std::vector<std::string> whitespace_tokens(std::string_view s);

// Lowercase whitespace tokens with punctuation stripped from both edges.
// Tokens that are pure punctuation disappear.
std::vector<std::string> word_tokens(std::string_view s);

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t state = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

std::vector<std::string> split(std::string_view s, char sep);

}  // namespace capr::text

namespace capr::text {

// Shortest decimal that round-trips.
std::string format_double(double v);

}  // namespace capr::text
