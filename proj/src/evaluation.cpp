#include "capr/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>

#include "capr/error.hpp"
#include "capr/parallel.hpp"
#include "capr/text.hpp"

namespace capr {

namespace {

const char* kind_name(Policy::Kind kind) {
  switch (kind) {
    case Policy::Kind::kIdentity: return "identity";
    case Policy::Kind::kUnconditional: return "unconditional";
    case Policy::Kind::kConditional: return "conditional";
  }
  return "unknown";
}

}  // namespace

PolicyEvaluation evaluate_policy(const Policy& policy, std::span<const std::string> prompts,
                                 const EvalContext& ctx) {
  if (prompts.empty()) throw InvalidArgument("evaluate_policy needs at least one test prompt");
  if (ctx.images_per_prompt < 1) throw InvalidArgument("images_per_prompt must be >= 1");
  if (!ctx.backends || !ctx.backends->generator || !ctx.backends->scorer) {
    throw InvalidArgument("evaluate_policy needs generator and scorer backends");
  }
  const bool conditional = policy.kind == Policy::Kind::kConditional;
  if (policy.kind != Policy::Kind::kIdentity && !ctx.backends->reformulator) {
    throw InvalidArgument("policy '" + policy.name + "' needs a reformulator");
  }
  if (conditional && (!ctx.predictor || !ctx.spec)) {
    throw InvalidArgument("policy '" + policy.name + "' needs a predictor and quantizer");
  }

  PolicyEvaluation eval;
  eval.policy = policy;
  eval.results.resize(prompts.size());
  parallel_for(prompts.size(), ctx.workers, [&](std::size_t i) {
    auto& r = eval.results[i];
    r.prompt = prompts[i];
    try {
      if (conditional) {
        const auto c = target_condition(r.prompt, *ctx.predictor, *ctx.spec, policy.delta);
        r.reformulated = ctx.backends->reformulator->reformulate(
            {r.prompt, c, render_meta_prompt(r.prompt, c)});
      } else if (policy.kind == Policy::Kind::kUnconditional) {
        r.reformulated = ctx.backends->reformulator->reformulate({r.prompt, std::nullopt, r.prompt});
      } else {
        r.reformulated = r.prompt;
      }
      std::vector<ImageRef> images;
      for (int k = 0; k < ctx.images_per_prompt; ++k) {
        images.push_back(ctx.backends->generator->generate(
            r.reformulated, ctx.seed + static_cast<std::uint64_t>(k), ctx.steps));
      }
      r.scores = score_prompt(r.prompt, images, *ctx.backends->scorer);
      r.phrases = phrase_count(r.reformulated);
      r.ok = true;
    } catch (const Error& e) {
      r.ok = false;
      r.error = e.what();
    }
  });

  std::size_t ok = 0;
  for (const auto& r : eval.results) {
    if (!r.ok) {
      ++eval.failures;
      continue;
    }
    ++ok;
    eval.mean_scores.overall += r.scores.overall;
    eval.mean_scores.similarity += r.scores.similarity;
    eval.mean_scores.aesthetic += r.scores.aesthetic;
    eval.mean_phrases += r.phrases;
  }
  if (static_cast<double>(eval.failures) > 0.1 * static_cast<double>(prompts.size())) {
    throw BackendError("policy '" + policy.name + "' failed on " + std::to_string(eval.failures) +
                       " of " + std::to_string(prompts.size()) + " prompts (first error: " +
                       [&] {
                         for (const auto& r : eval.results) {
                           if (!r.ok) return r.error;
                         }
                         return std::string();
                       }() +
                       ")");
  }
  const auto n = static_cast<double>(ok);
  eval.mean_scores.overall /= n;
  eval.mean_scores.similarity /= n;
  eval.mean_scores.aesthetic /= n;
  eval.mean_phrases /= n;
  return eval;
}

Comparison compare_pair(const PolicyEvaluation& policy, const PolicyEvaluation& baseline) {
  if (policy.results.size() != baseline.results.size()) {
    throw InvalidArgument("compared policies were evaluated on different prompt sets");
  }
  std::vector<double> a, b;
  for (std::size_t i = 0; i < policy.results.size(); ++i) {
    const auto& pa = policy.results[i];
    const auto& pb = baseline.results[i];
    if (pa.prompt != pb.prompt) {
      throw InvalidArgument("compared policies were evaluated on different prompt sets");
    }
    if (!pa.ok || !pb.ok) continue;
    a.push_back(pa.scores.overall);
    b.push_back(pb.scores.overall);
  }
  Comparison c;
  c.policy = policy.policy.name;
  c.baseline = baseline.policy.name;
  c.test = paired_t_test(a, b);
  c.mean_diff = mean(a) - mean(b);
  c.significant = c.test.p < kSignificanceLevel;
  return c;
}

EvalReport compare(const std::vector<PolicyEvaluation>& evaluations,
                   const std::vector<std::string>& baselines, const EvalContext& ctx) {
  if (evaluations.size() < 2) throw InvalidArgument("compare needs at least 2 policies");
  std::map<std::string, const PolicyEvaluation*> by_name;
  for (const auto& e : evaluations) by_name[e.policy.name] = &e;
  for (const auto& b : baselines) {
    if (!by_name.count(b)) throw InvalidArgument("unknown baseline policy '" + b + "'");
  }
  EvalReport report;
  report.policies = evaluations;
  report.images_per_prompt = ctx.images_per_prompt;
  report.seed = ctx.seed;
  report.backend = ctx.backends ? ctx.backends->kind : "";
  for (const auto& e : evaluations) {
    if (std::find(baselines.begin(), baselines.end(), e.policy.name) != baselines.end()) continue;
    for (const auto& b : baselines) report.comparisons.push_back(compare_pair(e, *by_name.at(b)));
  }
  return report;
}

namespace {

nlohmann::json number_or_label(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

}  // namespace

nlohmann::json to_json(const EvalReport& report) {
  nlohmann::json policies = nlohmann::json::array();
  for (const auto& e : report.policies) {
    nlohmann::json per_prompt = nlohmann::json::array();
    for (const auto& r : e.results) {
      nlohmann::json row{{"prompt", r.prompt}, {"ok", r.ok}};
      if (r.ok) {
        row["reformulated"] = r.reformulated;
        row["overall"] = r.scores.overall;
        row["similarity"] = r.scores.similarity;
        row["aesthetic"] = r.scores.aesthetic;
        row["phrases"] = r.phrases;
      } else {
        row["error"] = r.error;
      }
      per_prompt.push_back(std::move(row));
    }
    nlohmann::json p{{"name", e.policy.name},
                     {"kind", kind_name(e.policy.kind)},
                     {"aggregate",
                      {{"overall", e.mean_scores.overall},
                       {"similarity", e.mean_scores.similarity},
                       {"aesthetic", e.mean_scores.aesthetic},
                       {"phrases", e.mean_phrases}}},
                     {"failures", e.failures},
                     {"per_prompt", per_prompt}};
    if (e.policy.kind == Policy::Kind::kConditional) p["delta"] = to_json(e.policy.delta);
    policies.push_back(std::move(p));
  }
  nlohmann::json comparisons = nlohmann::json::array();
  for (const auto& c : report.comparisons) {
    comparisons.push_back({{"policy", c.policy},
                           {"baseline", c.baseline},
                           {"mean_diff", c.mean_diff},
                           {"t", number_or_label(c.test.t)},
                           {"p", c.test.p},
                           {"significant", c.significant}});
  }
  return {{"policies", policies},
          {"comparisons", comparisons},
          {"config",
           {{"images_per_prompt", report.images_per_prompt},
            {"seed", report.seed},
            {"backend", report.backend},
            {"significance_level", kSignificanceLevel}}}};
}

SweepFactor parse_sweep_factor(const std::string& name) {
  if (name == "overall") return SweepFactor::kOverall;
  if (name == "similarity") return SweepFactor::kSimilarity;
  if (name == "aesthetic") return SweepFactor::kAesthetic;
  if (name == "length") return SweepFactor::kLength;
  throw InvalidArgument("unknown sweep factor '" + name + "'");
}

const char* to_string(SweepFactor f) {
  switch (f) {
    case SweepFactor::kOverall: return "overall";
    case SweepFactor::kSimilarity: return "similarity";
    case SweepFactor::kAesthetic: return "aesthetic";
    case SweepFactor::kLength: return "length";
  }
  return "?";
}

std::vector<SweepRow> delta_sweep(SweepFactor factor, std::span<const int> values,
                                  const DeltaVector& frozen, std::span<const std::string> prompts,
                                  const EvalContext& ctx) {
  if (!ctx.spec) throw InvalidArgument("delta_sweep needs a quantizer");
  const int k = ctx.spec->k;
  std::vector<SweepRow> rows;
  for (int v : values) {
    const int hi = factor == SweepFactor::kLength ? 9 : k - 1;
    if (v < 0 || v > hi) {
      throw InvalidArgument(std::string("sweep value ") + std::to_string(v) + " outside [0, " +
                            std::to_string(hi) + "] for " + to_string(factor));
    }
    DeltaVector d = frozen;
    switch (factor) {
      case SweepFactor::kOverall: d.overall = v; break;
      case SweepFactor::kSimilarity: d.similarity = v; break;
      case SweepFactor::kAesthetic: d.aesthetic = v; break;
      case SweepFactor::kLength: d.length = v; break;
    }
    const auto e = evaluate_policy(Policy::conditional("sweep", d), prompts, ctx);
    rows.push_back({v, e.mean_scores.overall, e.mean_scores.similarity, e.mean_scores.aesthetic,
                    e.mean_phrases});
  }
  return rows;
}

void write_sweep_csv(std::span<const SweepRow> rows, SweepFactor factor, const DeltaVector& frozen,
                     std::ostream& out) {
  out << "# factor=" << to_string(factor) << " frozen: overall=" << frozen.overall
      << ",similarity=" << frozen.similarity << ",aesthetic=" << frozen.aesthetic
      << ",length=" << frozen.length << '\n';
  out << "delta,overall,similarity,aesthetic,phrases\n";
  for (const auto& r : rows) {
    out << r.delta << ',' << text::format_double(r.overall) << ',' << text::format_double(r.similarity)
        << ',' << text::format_double(r.aesthetic) << ',' << text::format_double(r.phrases) << '\n';
  }
}

}  // namespace capr
