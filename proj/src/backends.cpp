#include "capr/backends.hpp"

#include <algorithm>
#include <set>

#include "capr/text.hpp"

namespace capr {

double JaccardSimilarity::similarity(std::string_view a, std::string_view b) const {
  const auto ta = text::whitespace_tokens(a);
  const auto tb = text::whitespace_tokens(b);
  const std::set<std::string> sa(ta.begin(), ta.end());
  const std::set<std::string> sb(tb.begin(), tb.end());
  if (sa.empty() && sb.empty()) return 1.0;
  std::size_t inter = 0;
  for (const auto& t : sa) inter += sb.count(t);
  const std::size_t uni = sa.size() + sb.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace capr
