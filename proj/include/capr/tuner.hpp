#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "capr/backends.hpp"
#include "capr/capability.hpp"
#include "capr/gaussian_process.hpp"
#include "capr/surrogate.hpp"

namespace capr {

// Expected improvement offsets: c'' = clamp(c' + delta). Ordered
// lexicographically as (overall, similarity, aesthetic, length).
struct DeltaVector {
  int overall = 0;
  int similarity = 0;
  int aesthetic = 0;
  int length = 0;

  auto operator<=>(const DeltaVector&) const = default;
};

nlohmann::json to_json(const DeltaVector& d);
DeltaVector delta_from_json(const nlohmann::json& j);
std::string to_string(const DeltaVector& d);

struct IntBounds {
  int lo = 0;
  int hi = 0;
  bool fixed() const { return lo == hi; }
  int count() const { return hi - lo + 1; }
};

// Integer lattice of delta vectors. Dimensions with lo == hi are pinned.
struct SearchSpace {
  int k = kDefaultBins;
  IntBounds overall{kDefaultBins - 1, kDefaultBins - 1};
  IntBounds similarity{0, 9};
  IntBounds aesthetic{0, 9};
  IntBounds length{0, 9};

  // Overall pinned to K-1, similarity/aesthetic/length free in [0, 9].
  static SearchSpace defaults(int k = kDefaultBins);

  void validate() const;
  std::size_t size() const;
  // Lexicographic enumeration order.
  DeltaVector point(std::size_t index) const;
  std::size_t index_of(const DeltaVector& d) const;
  bool contains(const DeltaVector& d) const;
  int free_dims() const;
  // Free coordinates mapped onto [0, 1].
  Eigen::VectorXd normalize(const DeltaVector& d) const;
};

using Objective = std::function<double(const DeltaVector&)>;

struct TuneOptions {
  std::size_t budget = 50;
  std::size_t n_initial = 10;
  std::uint64_t seed = 0;
  double xi = 0.01;  // standardized units
  GPHyperparameters hyper;
};

struct TraceEntry {
  DeltaVector delta;
  double value = 0.0;
};

struct TuneResult {
  DeltaVector best_delta;
  double best_value = 0.0;
  std::vector<TraceEntry> trace;
  std::size_t calls_used = 0;
};

nlohmann::json to_json(const TuneResult& r, int k, std::uint64_t seed, std::size_t budget);
TuneResult tune_result_from_json(const nlohmann::json& j);

// Seeded distinct initial design, then one GP/EI proposal per remaining call
// (EI maximized exhaustively over unevaluated points, ties to the
// lexicographically smallest). Once the remaining budget covers every
// unevaluated point they are all evaluated in lattice order. Best observed
// value wins, ties to the lexicographically smallest delta.
TuneResult tune(const SearchSpace& space, const TuneOptions& options, const Objective& objective);

struct OracleResult {
  std::vector<TraceEntry> table;  // lattice order
  DeltaVector best_delta;
  double best_value = 0.0;
};

inline constexpr std::size_t kOracleCap = 10000;

OracleResult brute_force_oracle(const SearchSpace& space, const Objective& objective,
                                std::size_t cap = kOracleCap);

// c' from the predictor, c'' = clamp(c' + delta, 0, K-1) per bin and
// phrase_count = max(1, phrase_count(prompt) + length delta).
CapabilityCondition target_condition(std::string_view prompt, const QualityPredictor& predictor,
                                     const QuantizerSpec& spec, const DeltaVector& delta);

struct ObjectiveContext {
  std::span<const std::string> prompts;
  const QualityPredictor* predictor = nullptr;
  const QuantizerSpec* spec = nullptr;
  const Backends* backends = nullptr;
  std::uint64_t seed = 0;
  int steps = 20;  // reduced-fidelity generation while tuning
  int workers = 1;
};

// Mean overall score of one image per validation prompt after reformulating
// under `delta`. Images are scored against the original prompt.
double estimate_objective(const DeltaVector& delta, const ObjectiveContext& ctx);

}  // namespace capr
