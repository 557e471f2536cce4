#include "capr/tuner.hpp"

#include <algorithm>
#include <limits>
#include <random>

#include "capr/error.hpp"
#include "capr/parallel.hpp"

namespace capr {

nlohmann::json to_json(const DeltaVector& d) {
  return {{"overall", d.overall},
          {"similarity", d.similarity},
          {"aesthetic", d.aesthetic},
          {"length", d.length}};
}

DeltaVector delta_from_json(const nlohmann::json& j) {
  return {j.at("overall").get<int>(), j.at("similarity").get<int>(), j.at("aesthetic").get<int>(),
          j.at("length").get<int>()};
}

std::string to_string(const DeltaVector& d) {
  return "(overall=" + std::to_string(d.overall) + ", similarity=" + std::to_string(d.similarity) +
         ", aesthetic=" + std::to_string(d.aesthetic) + ", length=" + std::to_string(d.length) + ")";
}

SearchSpace SearchSpace::defaults(int k) {
  SearchSpace s;
  s.k = k;
  s.overall = {k - 1, k - 1};
  s.similarity = {0, 9};
  s.aesthetic = {0, 9};
  s.length = {0, 9};
  return s;
}

void SearchSpace::validate() const {
  if (k < 2) throw InvalidArgument("search space needs K >= 2");
  for (const auto* b : {&overall, &similarity, &aesthetic, &length}) {
    if (b->hi < b->lo) throw InvalidArgument("search space bound with hi < lo");
  }
}

std::size_t SearchSpace::size() const {
  return static_cast<std::size_t>(overall.count()) * static_cast<std::size_t>(similarity.count()) *
         static_cast<std::size_t>(aesthetic.count()) * static_cast<std::size_t>(length.count());
}

DeltaVector SearchSpace::point(std::size_t index) const {
  if (index >= size()) throw InvalidArgument("search space index out of range");
  DeltaVector d;
  const auto take = [&index](const IntBounds& b) {
    const auto c = static_cast<std::size_t>(b.count());
    const int v = b.lo + static_cast<int>(index % c);
    index /= c;
    return v;
  };
  d.length = take(length);
  d.aesthetic = take(aesthetic);
  d.similarity = take(similarity);
  d.overall = take(overall);
  return d;
}

std::size_t SearchSpace::index_of(const DeltaVector& d) const {
  if (!contains(d)) throw InvalidArgument("delta " + to_string(d) + " outside the search space");
  std::size_t idx = static_cast<std::size_t>(d.overall - overall.lo);
  idx = idx * static_cast<std::size_t>(similarity.count()) + static_cast<std::size_t>(d.similarity - similarity.lo);
  idx = idx * static_cast<std::size_t>(aesthetic.count()) + static_cast<std::size_t>(d.aesthetic - aesthetic.lo);
  idx = idx * static_cast<std::size_t>(length.count()) + static_cast<std::size_t>(d.length - length.lo);
  return idx;
}

bool SearchSpace::contains(const DeltaVector& d) const {
  auto in = [](int v, const IntBounds& b) { return v >= b.lo && v <= b.hi; };
  return in(d.overall, overall) && in(d.similarity, similarity) && in(d.aesthetic, aesthetic) &&
         in(d.length, length);
}

int SearchSpace::free_dims() const {
  int n = 0;
  for (const auto* b : {&overall, &similarity, &aesthetic, &length}) n += b->fixed() ? 0 : 1;
  return n;
}

Eigen::VectorXd SearchSpace::normalize(const DeltaVector& d) const {
  Eigen::VectorXd x(free_dims());
  Eigen::Index i = 0;
  const std::pair<int, const IntBounds*> dims[] = {
      {d.overall, &overall}, {d.similarity, &similarity}, {d.aesthetic, &aesthetic}, {d.length, &length}};
  for (const auto& [v, b] : dims) {
    if (b->fixed()) continue;
    x(i++) = static_cast<double>(v - b->lo) / static_cast<double>(b->hi - b->lo);
  }
  return x;
}

nlohmann::json to_json(const TuneResult& r, int k, std::uint64_t seed, std::size_t budget) {
  nlohmann::json trace = nlohmann::json::array();
  for (const auto& e : r.trace) trace.push_back({{"delta", to_json(e.delta)}, {"value", e.value}});
  return {{"k", k},
          {"best_delta", to_json(r.best_delta)},
          {"best_value", r.best_value},
          {"trace", trace},
          {"calls_used", r.calls_used},
          {"seed", seed},
          {"budget", budget}};
}

TuneResult tune_result_from_json(const nlohmann::json& j) {
  TuneResult r;
  r.best_delta = delta_from_json(j.at("best_delta"));
  r.best_value = j.at("best_value").get<double>();
  for (const auto& e : j.at("trace")) {
    r.trace.push_back({delta_from_json(e.at("delta")), e.at("value").get<double>()});
  }
  r.calls_used = j.value("calls_used", r.trace.size());
  return r;
}

namespace {

void record(TuneResult& result, const DeltaVector& d, double value) {
  result.trace.push_back({d, value});
  ++result.calls_used;
  if (result.trace.size() == 1 || value > result.best_value ||
      (value == result.best_value && d < result.best_delta)) {
    result.best_value = value;
    result.best_delta = d;
  }
}

}  // namespace

TuneResult tune(const SearchSpace& space, const TuneOptions& options, const Objective& objective) {
  space.validate();
  if (options.n_initial < 1) throw InvalidArgument("tune needs n_initial >= 1");
  if (options.budget < options.n_initial) throw InvalidArgument("tune needs budget >= n_initial");
  const std::size_t n_points = space.size();
  if (n_points < options.n_initial) {
    throw InvalidArgument("search space has " + std::to_string(n_points) +
                          " points, fewer than n_initial = " + std::to_string(options.n_initial));
  }
  const std::size_t budget = std::min(options.budget, n_points);

  TuneResult result;
  std::vector<bool> evaluated(n_points, false);
  const int dim = space.free_dims();
  Eigen::MatrixXd xs(0, dim);
  std::vector<double> ys;
  auto evaluate = [&](std::size_t idx) {
    const auto d = space.point(idx);
    const double v = objective(d);
    evaluated[idx] = true;
    xs.conservativeResize(xs.rows() + 1, Eigen::NoChange);
    xs.row(xs.rows() - 1) = space.normalize(d).transpose();
    ys.push_back(v);
    record(result, d, v);
  };

  // Partial Fisher-Yates on raw mt19937_64 output for a portable design.
  std::vector<std::size_t> order(n_points);
  for (std::size_t i = 0; i < n_points; ++i) order[i] = i;
  std::mt19937_64 rng(options.seed);
  for (std::size_t i = 0; i < options.n_initial; ++i) {
    std::swap(order[i], order[i + rng() % (n_points - i)]);
    evaluate(order[i]);
  }

  while (result.calls_used < budget) {
    const std::size_t remaining = n_points - result.calls_used;
    if (budget - result.calls_used >= remaining) {
      // Every unevaluated point is going to be visited regardless of order.
      for (std::size_t idx = 0; idx < n_points; ++idx) {
        if (!evaluated[idx]) evaluate(idx);
      }
      break;
    }
    const auto gp = GPState::fit(xs, ys, options.hyper);
    const double best = gp.best_standardized();
    std::size_t pick = n_points;
    double pick_ei = -std::numeric_limits<double>::infinity();
    for (std::size_t idx = 0; idx < n_points; ++idx) {
      if (evaluated[idx]) continue;
      const double ei = expected_improvement(gp, space.normalize(space.point(idx)), best, options.xi);
      if (ei > pick_ei || pick == n_points) {
        pick_ei = ei;
        pick = idx;
      }
    }
    evaluate(pick);
  }
  return result;
}

OracleResult brute_force_oracle(const SearchSpace& space, const Objective& objective, std::size_t cap) {
  space.validate();
  const std::size_t n = space.size();
  if (n > cap) {
    throw InvalidArgument("search space has " + std::to_string(n) + " points, above the oracle cap of " +
                          std::to_string(cap) + "; use the GP tuner instead");
  }
  OracleResult out;
  out.table.reserve(n);
  for (std::size_t idx = 0; idx < n; ++idx) {
    const auto d = space.point(idx);
    const double v = objective(d);
    out.table.push_back({d, v});
    if (idx == 0 || v > out.best_value) {
      out.best_value = v;
      out.best_delta = d;
    }
  }
  return out;
}

CapabilityCondition target_condition(std::string_view prompt, const QualityPredictor& predictor,
                                     const QuantizerSpec& spec, const DeltaVector& delta) {
  const auto initial = quantize(predictor.predict(prompt), spec);
  auto bump = [&spec](int bin, int d) { return std::clamp(bin + d, 0, spec.k - 1); };
  CapabilityCondition c;
  c.initial = initial;
  c.expected.similarity = bump(initial.similarity, delta.similarity);
  c.expected.aesthetic = bump(initial.aesthetic, delta.aesthetic);
  c.expected.overall = bump(initial.overall, delta.overall);
  c.expected.phrase_count = std::max(1, phrase_count(prompt) + delta.length);
  return c;
}

double estimate_objective(const DeltaVector& delta, const ObjectiveContext& ctx) {
  if (ctx.prompts.empty()) throw InvalidArgument("estimate_objective needs a non-empty validation set");
  if (!ctx.predictor || !ctx.spec || !ctx.backends || !ctx.backends->generator ||
      !ctx.backends->scorer || !ctx.backends->reformulator) {
    throw InvalidArgument("estimate_objective needs predictor, quantizer and all backends");
  }
  std::vector<double> overall(ctx.prompts.size());
  parallel_for(ctx.prompts.size(), ctx.workers, [&](std::size_t i) {
    const auto& prompt = ctx.prompts[i];
    try {
      const auto condition = target_condition(prompt, *ctx.predictor, *ctx.spec, delta);
      ReformulationRequest req{prompt, condition, render_meta_prompt(prompt, condition)};
      const auto reformulated = ctx.backends->reformulator->reformulate(req);
      const auto image = ctx.backends->generator->generate(reformulated, ctx.seed, ctx.steps);
      overall[i] = ctx.backends->scorer->score(prompt, image).overall;
    } catch (const Error& e) {
      throw BackendError("objective evaluation failed for prompt '" + prompt + "': " + e.what());
    }
  });
  double sum = 0.0;
  for (double v : overall) sum += v;
  return sum / static_cast<double>(overall.size());
}

}  // namespace capr
