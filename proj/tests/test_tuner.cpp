#include <doctest.h>

#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "capr/error.hpp"
#include "capr/gaussian_process.hpp"
#include "capr/synthetic.hpp"
#include "capr/tuner.hpp"
#include "oracles.hpp"

using namespace capr;

namespace {

double kernel(double r, double l, double sf2) {
  const double a = std::sqrt(5.0) * r / l;
  return sf2 * (1.0 + a + 5.0 * r * r / (3.0 * l * l)) * std::exp(-a);
}

Eigen::MatrixXd rows(std::initializer_list<std::initializer_list<double>> pts) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(pts.size()),
                    static_cast<Eigen::Index>(pts.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& r : pts) {
    Eigen::Index j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

// E[max(0, Y - best - xi)] for Y ~ N(mu, sigma^2) by composite Simpson.
double ei_quadrature(double mu, double sigma, double best, double xi) {
  const double lo = best + xi;
  const double hi = std::max(lo, mu) + 12.0 * sigma;
  const int n = 20000;
  const double h = (hi - lo) / n;
  auto f = [&](double y) {
    const double z = (y - mu) / sigma;
    return (y - lo) * std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * M_PI));
  };
  double s = f(lo) + f(hi);
  for (int i = 1; i < n; ++i) s += f(lo + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

}  // namespace

TEST_CASE("matern 5/2 kernel") {
  CHECK(matern52(0.0, 0.5, 2.0) == 2.0);
  for (double r : {0.1, 0.5, 1.3}) CHECK(matern52(r, 0.5, 1.0) == doctest::Approx(kernel(r, 0.5, 1.0)));
}

TEST_CASE("gp prior") {
  GPState prior(2, {});
  const auto p = prior.predict(vec({0.3, 0.4}));
  CHECK(p.mean == 0.0);
  CHECK(p.variance == 1.0);
  const auto empty = GPState::fit(Eigen::MatrixXd(0, 2), {}, {0.5, 2.5, 1e-6});
  CHECK(empty.predict(vec({0.0, 0.0})).variance == 2.5);
}

TEST_CASE("gp interpolates observations") {
  GPHyperparameters h{0.5, 1.0, 1e-16};
  const auto one = GPState::fit(rows({{0.3}}), {0.75}, h);
  CHECK(std::abs(one.predict_value(vec({0.3})) - 0.75) < 1e-6);

  const auto pts = rows({{0.0, 0.0}, {0.5, 0.1}, {1.0, 1.0}, {0.2, 0.9}, {0.7, 0.4}});
  const std::vector<double> ys = {0.1, 0.5, -0.2, 0.9, 0.3};
  const auto gp = GPState::fit(pts, ys, h);
  for (int i = 0; i < 5; ++i) {
    const Eigen::VectorXd x = pts.row(i).transpose();
    CHECK(std::abs(gp.predict_value(x) - ys[static_cast<std::size_t>(i)]) < 1e-6);
    CHECK(gp.predict(x).variance <= h.noise_variance + 1e-6);
  }
}

TEST_CASE("two-point posterior mean matches the closed form") {
  const GPHyperparameters h{0.5, 1.0, 1e-6};
  const double x1 = 0.2, x2 = 0.7, y1 = 0.3, y2 = 0.9;
  const auto gp = GPState::fit(rows({{x1}, {x2}}), {y1, y2}, h);
  // Standardized with population std: z = (-1, +1).
  const double m = 0.5 * (y1 + y2), s = 0.5 * std::abs(y2 - y1);
  const double z1 = (y1 - m) / s, z2 = (y2 - m) / s;
  const double a = 1.0 + h.noise_variance, b = kernel(x2 - x1, 0.5, 1.0);
  const double det = a * a - b * b;
  for (double x : {0.45, 0.3, 0.95}) {
    const double k1 = kernel(std::abs(x - x1), 0.5, 1.0), k2 = kernel(std::abs(x - x2), 0.5, 1.0);
    // [k1 k2] * [[a, -b], [-b, a]] / det * [z1 z2]
    const double mean = (k1 * (a * z1 - b * z2) + k2 * (-b * z1 + a * z2)) / det;
    const double var = 1.0 - (k1 * (a * k1 - b * k2) + k2 * (-b * k1 + a * k2)) / det;
    const auto p = gp.predict(vec({x}));
    CHECK(std::abs(p.mean - mean) < 1e-9);
    CHECK(std::abs(p.raw_variance - var) < 1e-9);
    CHECK(std::abs(gp.predict_value(vec({x})) - (mean * s + m)) < 1e-9);
  }
}

TEST_CASE("posterior variance never meaningfully negative") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 30);
    Eigen::MatrixXd pts(n, 3);
    std::vector<double> ys;
    for (int i = 0; i < n; ++i) {
      // Snap to a coarse lattice so near-duplicate points appear.
      for (int j = 0; j < 3; ++j) pts(i, j) = std::round(u(rng) * 4.0) / 4.0;
      ys.push_back(u(rng));
    }
    const auto gp = GPState::fit(pts, ys, {0.5, 1.0, 1e-6});
    for (int q = 0; q < 50; ++q) {
      const auto p = gp.predict(vec({u(rng), u(rng), u(rng)}));
      CHECK(p.raw_variance >= -1e-9);
      CHECK(p.variance >= 0.0);
    }
  }
}

TEST_CASE("gp fit errors") {
  CHECK_THROWS_AS(GPState::fit(rows({{0.1}}), {1.0, 2.0}), InvalidArgument);
  CHECK_THROWS_AS(GPState::fit(rows({{0.1}}), {1.0}, {0.0, 1.0, 0.0}), InvalidArgument);
  // Duplicate points with zero noise need jitter.
  const auto dup = GPState::fit(rows({{0.1}, {0.1}}), {1.0, 2.0}, {0.5, 1.0, 0.0});
  CHECK(dup.jitter() >= 1e-8);
}

TEST_CASE("expected improvement examples") {
  const double xi = 0.01;
  CHECK(expected_improvement(0.4, 0.0, 0.4, xi) == 0.0);
  CHECK(std::abs(expected_improvement(0.4 + 1.0 + xi, 0.0, 0.4, xi) - 1.0) < 1e-6);
  CHECK(std::abs(expected_improvement(0.4 + xi, 1.0, 0.4, xi) - 0.3989422804014327) < 1e-6);
  CHECK(normal_pdf(0.0) == doctest::Approx(0.3989422804014327));
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5));
}

TEST_CASE("expected improvement agrees with quadrature and is non-negative") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    const double mu = u(rng), sigma = 0.05 + std::abs(u(rng)), best = u(rng);
    CHECK(expected_improvement(mu, sigma, best, 0.01) ==
          doctest::Approx(ei_quadrature(mu, sigma, best, 0.01)).epsilon(1e-6));
  }
  for (int trial = 0; trial < 2000; ++trial) {
    CHECK(expected_improvement(u(rng) * 10, std::abs(u(rng)) * 3, u(rng), 0.01) >= 0.0);
  }
}

TEST_CASE("search space enumeration") {
  const auto space = SearchSpace::defaults();
  CHECK(space.size() == 1000);
  CHECK(space.free_dims() == 3);
  CHECK(space.point(0) == DeltaVector{9, 0, 0, 0});
  CHECK(space.point(1) == DeltaVector{9, 0, 0, 1});
  CHECK(space.point(999) == DeltaVector{9, 9, 9, 9});
  for (std::size_t i = 0; i < space.size(); ++i) {
    CHECK(space.index_of(space.point(i)) == i);
    if (i) CHECK(space.point(i - 1) < space.point(i));
  }
  CHECK_FALSE(space.contains({8, 0, 0, 0}));
  const auto x = space.normalize({9, 9, 0, 3});
  CHECK(x.size() == 3);
  CHECK(x(0) == 1.0);
  CHECK(x(1) == 0.0);
  CHECK(x(2) == doctest::Approx(1.0 / 3.0));
  SearchSpace bad = space;
  bad.similarity = {3, 2};
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

namespace {

double bowl(const DeltaVector& d) {
  return -std::pow(d.similarity - 3, 2) - std::pow(d.aesthetic - 6, 2) - 0.5 * std::pow(d.length - 4, 2);
}

}  // namespace

TEST_CASE("tune basics") {
  const auto space = SearchSpace::defaults();
  int calls = 0;
  auto counted = [&](const DeltaVector& d) {
    ++calls;
    return bowl(d);
  };
  const auto single = tune(space, {1, 1, 5}, counted);
  CHECK(calls == 1);
  CHECK(single.calls_used == 1);
  REQUIRE(single.trace.size() == 1);
  CHECK(single.best_delta == single.trace[0].delta);

  const auto r = tune(space, {50, 10, 3}, bowl);
  CHECK(r.calls_used == 50);
  CHECK(r.trace.size() == 50);
  std::set<DeltaVector> seen;
  double best = -1e300;
  for (const auto& t : r.trace) {
    CHECK(seen.insert(t.delta).second);
    CHECK(space.contains(t.delta));
    best = std::max(best, t.value);
  }
  CHECK(r.best_value == best);
  CHECK(r.best_delta == DeltaVector{9, 3, 6, 4});

  CHECK_THROWS_AS(tune(space, {5, 0, 0}, bowl), InvalidArgument);
  CHECK_THROWS_AS(tune(space, {5, 6, 0}, bowl), InvalidArgument);
  SearchSpace tiny = space;
  tiny.similarity = {0, 0};
  tiny.aesthetic = {0, 0};
  tiny.length = {0, 2};
  CHECK_THROWS_AS(tune(tiny, {5, 4, 0}, bowl), InvalidArgument);
}

TEST_CASE("tune with an exhaustive budget finds the oracle argmax") {
  SearchSpace space = SearchSpace::defaults();
  space.similarity = {0, 4};
  space.aesthetic = {2, 7};
  std::mt19937_64 rng(8);
  std::vector<double> table(space.size());
  for (auto& v : table) v = std::uniform_real_distribution<double>(0, 1)(rng);
  auto f = [&](const DeltaVector& d) { return table[space.index_of(d)]; };
  const auto oracle = brute_force_oracle(space, f);
  CHECK(oracle.table.size() == space.size());
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto r = tune(space, {space.size(), 10, seed}, f);
    CHECK(r.calls_used == space.size());
    CHECK(r.best_delta == oracle.best_delta);
    CHECK(r.best_value == oracle.best_value);
  }
}

TEST_CASE("budget is monotone for a fixed seed") {
  const auto space = SearchSpace::defaults();
  std::mt19937_64 rng(31);
  std::vector<double> table(space.size());
  for (auto& v : table) v = std::uniform_real_distribution<double>(0, 1)(rng);
  auto f = [&](const DeltaVector& d) { return table[space.index_of(d)] + 0.1 * bowl(d); };
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    double prev = -1e300;
    for (std::size_t budget : {10, 15, 25, 40}) {
      const auto r = tune(space, {budget, 10, seed}, f);
      CHECK(r.best_value >= prev);
      prev = r.best_value;
    }
  }
}

TEST_CASE("oracle examples") {
  SearchSpace two = SearchSpace::defaults();
  two.similarity = {0, 0};
  two.aesthetic = {0, 0};
  two.length = {3, 4};
  const auto r = brute_force_oracle(two, [](const DeltaVector& d) { return d.length == 3 ? 1.0 : 2.0; });
  CHECK(r.table.size() == 2);
  CHECK(r.best_delta == DeltaVector{9, 0, 0, 4});

  const auto flat = brute_force_oracle(SearchSpace::defaults(), [](const DeltaVector&) { return 0.5; });
  CHECK(flat.best_delta == DeltaVector{9, 0, 0, 0});
  CHECK_THROWS_AS(brute_force_oracle(SearchSpace::defaults(), bowl, 999), InvalidArgument);
}

TEST_CASE("delta.json round-trip") {
  const auto r = tune(SearchSpace::defaults(), {12, 10, 1}, bowl);
  const auto j = to_json(r, 10, 1, 12);
  for (const char* key : {"k", "best_delta", "best_value", "trace", "seed", "budget", "calls_used"}) {
    CHECK(j.contains(key));
  }
  const auto back = tune_result_from_json(j);
  CHECK(back.best_delta == r.best_delta);
  CHECK(back.best_value == r.best_value);
  CHECK(back.calls_used == r.calls_used);
  CHECK(back.trace.size() == r.trace.size());
  CHECK(delta_from_json(to_json(DeltaVector{9, 1, 2, 3})) == DeltaVector{9, 1, 2, 3});
}

namespace {

class FixedPredictor final : public QualityPredictor {
 public:
  explicit FixedPredictor(QualityScores s) : s_(s) {}
  QualityScores predict(std::string_view) const override { return s_; }

 private:
  QualityScores s_;
};

}  // namespace

TEST_CASE("target condition clamps and pins overall") {
  const QuantizerSpec spec{10, {0, 1}, {0, 1}, {0, 1}};
  const FixedPredictor pred({0.45, 0.85, 0.35});
  const auto c = target_condition("a, b", pred, spec, {9, 3, 4, 2});
  CHECK(c.initial == ScoreBins{8, 3, 4});
  CHECK(c.expected == ExpectedBins{9, 7, 9, 4});
  std::mt19937_64 rng(2);
  const auto space = SearchSpace::defaults();
  for (int i = 0; i < 200; ++i) {
    const FixedPredictor p({std::uniform_real_distribution<double>(-1, 2)(rng), 0.5, 0.5});
    const auto d = space.point(rng() % space.size());
    CHECK(target_condition("x", p, spec, d).expected.overall == 9);
  }
}

TEST_CASE("objective in the synthetic world matches hand evaluation") {
  const auto lex = Lexicon::builtin();
  const auto backends = synthetic::make_backends(lex);
  const QuantizerSpec spec{10, {0, 1}, {0, 1}, {0, 1}};
  const std::vector<std::string> prompts = {"a cat", "a red fox, 4k", "castle, artstation, night",
                                            "sea, digital art, concept art", "a dog, wet fur"};
  const std::vector<int> styles = {0, 1, 1, 2, 0};

  // Aesthetic bin 0 -> no style target; unchanged phrase count -> prompt kept.
  const FixedPredictor low({0.5, 0.5, 0.05});
  ObjectiveContext ctx{prompts, &low, &spec, &backends, 7, 20, 1};
  double want = 0.0;
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    const auto u = synthetic::hash_uniform(prompts[i], 7);
    want += oracle::synth(styles[i], phrase_count(prompts[i]), u).overall;
  }
  want /= prompts.size();
  CHECK(estimate_objective({9, 0, 0, 0}, ctx) == doctest::Approx(want).epsilon(1e-12));
  CHECK(estimate_objective({9, 0, 0, 0}, ctx) == estimate_objective({9, 0, 0, 0}, ctx));

  // Aesthetic bin 4 -> round(4/9*6) = 3 style terms, three extra phrases.
  const FixedPredictor mid({0.5, 0.5, 0.45});
  ObjectiveContext ctx2{prompts, &mid, &spec, &backends, 7, 20, 3};
  synthetic::Reformulator ref(lex);
  want = 0.0;
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    const int n = phrase_count(prompts[i]) + 3;
    const int s = std::max(styles[i], std::min(3, styles[i] + 3));
    const auto out = ref.reformulate(prompts[i], CapabilityCondition{{5, 4, 5}, {5, 4, 9, n}});
    CHECK(phrase_count(out) == n);
    CHECK(static_cast<int>(lex.style_count(out)) == s);
    want += oracle::synth(s, n, synthetic::hash_uniform(out, 7)).overall;
  }
  want /= prompts.size();
  CHECK(estimate_objective({9, 0, 0, 3}, ctx2) == doctest::Approx(want).epsilon(1e-12));

  ObjectiveContext empty{{}, &low, &spec, &backends, 7, 20, 1};
  CHECK_THROWS_AS(estimate_objective({9, 0, 0, 0}, empty), InvalidArgument);
}
