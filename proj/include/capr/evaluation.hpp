#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "capr/backends.hpp"
#include "capr/capability.hpp"
#include "capr/stats.hpp"
#include "capr/surrogate.hpp"
#include "capr/tuner.hpp"

namespace capr {

struct Policy {
  enum class Kind { kIdentity, kUnconditional, kConditional };

  std::string name;
  Kind kind = Kind::kIdentity;
  DeltaVector delta;

  static Policy identity() { return {"identity", Kind::kIdentity, {}}; }
  // Reformulator called on the raw prompt with no capability condition.
  static Policy unconditional() { return {"unconditional", Kind::kUnconditional, {}}; }
  static Policy conditional(std::string name, DeltaVector delta) {
    return {std::move(name), Kind::kConditional, delta};
  }
};

struct EvalContext {
  const Backends* backends = nullptr;
  const QualityPredictor* predictor = nullptr;  // required for conditional policies
  const QuantizerSpec* spec = nullptr;          // required for conditional policies
  int images_per_prompt = 4;
  std::uint64_t seed = 0;
  int steps = 50;
  int workers = 1;
};

struct PromptResult {
  std::string prompt;
  std::string reformulated;
  QualityScores scores;  // mean over images, scored against `prompt`
  int phrases = 0;       // phrase count of the reformulated prompt
  bool ok = false;
  std::string error;
};

struct PolicyEvaluation {
  Policy policy;
  std::vector<PromptResult> results;
  QualityScores mean_scores;
  double mean_phrases = 0.0;
  std::size_t failures = 0;
};

// Reformulate once per prompt, render images_per_prompt images with seeds
// seed..seed+N-1 and score each against the original prompt. Failing prompts
// are recorded; more than 10% failures aborts with BackendError.
PolicyEvaluation evaluate_policy(const Policy& policy, std::span<const std::string> prompts,
                                 const EvalContext& ctx);

struct Comparison {
  std::string policy;
  std::string baseline;
  double mean_diff = 0.0;
  TTestResult test;
  bool significant = false;  // p < 0.01
};

inline constexpr double kSignificanceLevel = 0.01;

// Paired over the prompts both evaluations scored successfully.
Comparison compare_pair(const PolicyEvaluation& policy, const PolicyEvaluation& baseline);

struct EvalReport {
  std::vector<PolicyEvaluation> policies;
  std::vector<Comparison> comparisons;
  int images_per_prompt = 0;
  std::uint64_t seed = 0;
  std::string backend;
};

// Every non-baseline policy against every named baseline. All evaluations
// must share the same prompt list.
EvalReport compare(const std::vector<PolicyEvaluation>& evaluations,
                   const std::vector<std::string>& baselines, const EvalContext& ctx);

nlohmann::json to_json(const EvalReport& report);

enum class SweepFactor { kOverall, kSimilarity, kAesthetic, kLength };
SweepFactor parse_sweep_factor(const std::string& name);
const char* to_string(SweepFactor f);

struct SweepRow {
  int delta = 0;
  double overall = 0.0;
  double similarity = 0.0;
  double aesthetic = 0.0;
  double phrases = 0.0;
};

inline constexpr DeltaVector kSweepFrozenDefault{0, 0, 0, 5};

// One evaluate_policy pass per value, varying only `factor`.
std::vector<SweepRow> delta_sweep(SweepFactor factor, std::span<const int> values,
                                  const DeltaVector& frozen, std::span<const std::string> prompts,
                                  const EvalContext& ctx);

void write_sweep_csv(std::span<const SweepRow> rows, SweepFactor factor, const DeltaVector& frozen,
                     std::ostream& out);

}  // namespace capr
