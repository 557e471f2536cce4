#include "capr/surrogate.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "capr/capability.hpp"
#include "capr/error.hpp"
#include "capr/text.hpp"

namespace capr {

PromptFeatures featurize(std::string_view prompt, const Lexicon& lexicon) {
  const auto tokens = text::word_tokens(prompt);
  double total_len = 0.0;
  for (const auto& t : tokens) total_len += static_cast<double>(t.size());
  const bool digit = std::any_of(prompt.begin(), prompt.end(),
                                 [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
  PromptFeatures f;
  f.values = {1.0,
              static_cast<double>(phrase_count(prompt)),
              static_cast<double>(tokens.size()),
              static_cast<double>(lexicon.style_count(prompt)),
              tokens.empty() ? 0.0 : total_len / static_cast<double>(tokens.size()),
              digit ? 1.0 : 0.0};
  return f;
}

Eigen::VectorXd ridge_solve(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda,
                            const std::vector<bool>& penalized) {
  if (x.rows() != y.size()) throw InvalidArgument("ridge: design/target size mismatch");
  if (static_cast<Eigen::Index>(penalized.size()) != x.cols()) {
    throw InvalidArgument("ridge: penalty mask size mismatch");
  }
  if (!(lambda > 0.0)) throw InvalidArgument("ridge: lambda must be > 0");
  Eigen::MatrixXd normal = x.transpose() * x;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    if (penalized[static_cast<std::size_t>(j)]) normal(j, j) += lambda;
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);
  if (ldlt.info() != Eigen::Success) throw NumericalError("ridge: normal matrix factorization failed");
  Eigen::VectorXd w = ldlt.solve(x.transpose() * y);
  if (!w.allFinite()) throw NumericalError("ridge: solution is not finite");
  return w;
}

SurrogateModel fit_surrogate(std::span<const ScoredPrompt> samples, const Lexicon& lexicon,
                             double lambda) {
  std::set<std::string> distinct;
  for (const auto& s : samples) distinct.insert(s.prompt);
  if (distinct.size() < 2) throw InvalidArgument("surrogate fit needs at least 2 distinct prompts");
  if (!(lambda > 0.0)) throw InvalidArgument("surrogate lambda must be > 0");

  const auto n = static_cast<Eigen::Index>(samples.size());
  const auto d = static_cast<Eigen::Index>(PromptFeatures::kSize);
  Eigen::MatrixXd x(n, d);
  Eigen::VectorXd y_overall(n), y_similarity(n), y_aesthetic(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& s = samples[static_cast<std::size_t>(i)];
    const auto f = featurize(s.prompt, lexicon);
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = f.values[static_cast<std::size_t>(j)];
    y_overall(i) = s.scores.overall;
    y_similarity(i) = s.scores.similarity;
    y_aesthetic(i) = s.scores.aesthetic;
  }
  std::vector<bool> penalized(PromptFeatures::kSize, true);
  penalized[0] = false;

  auto solve = [&](const Eigen::VectorXd& y) {
    const Eigen::VectorXd w = ridge_solve(x, y, lambda, penalized);
    SurrogateModel::Weights out{};
    for (Eigen::Index j = 0; j < d; ++j) out[static_cast<std::size_t>(j)] = w(j);
    return out;
  };
  SurrogateModel model;
  model.lambda = lambda;
  model.lexicon_hash = lexicon.hash();
  model.overall = solve(y_overall);
  model.similarity = solve(y_similarity);
  model.aesthetic = solve(y_aesthetic);
  model.n_train = samples.size();
  return model;
}

QualityScores predict(const SurrogateModel& model, std::string_view prompt, const Lexicon& lexicon) {
  const auto f = featurize(prompt, lexicon);
  auto dot = [&](const SurrogateModel::Weights& w) {
    double acc = 0.0;
    for (std::size_t j = 0; j < PromptFeatures::kSize; ++j) acc += w[j] * f.values[j];
    return acc;
  };
  return {dot(model.overall), dot(model.similarity), dot(model.aesthetic)};
}

nlohmann::json to_json(const SurrogateModel& model) {
  return {{"lambda", model.lambda},
          {"lexicon_hash", text::hex64(model.lexicon_hash)},
          {"features", PromptFeatures::kNames},
          {"n_train", model.n_train},
          {"weights",
           {{"overall", model.overall},
            {"similarity", model.similarity},
            {"aesthetic", model.aesthetic}}}};
}

SurrogateModel surrogate_from_json(const nlohmann::json& j) {
  SurrogateModel m;
  try {
    m.lambda = j.at("lambda").get<double>();
    m.lexicon_hash = std::stoull(j.at("lexicon_hash").get<std::string>(), nullptr, 16);
    const auto& w = j.at("weights");
    m.overall = w.at("overall").get<SurrogateModel::Weights>();
    m.similarity = w.at("similarity").get<SurrogateModel::Weights>();
    m.aesthetic = w.at("aesthetic").get<SurrogateModel::Weights>();
    m.n_train = j.value("n_train", std::size_t{0});
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed surrogate model: ") + e.what());
  }
  return m;
}

RidgeSurrogate::RidgeSurrogate(SurrogateModel model, Lexicon lexicon)
    : model_(std::move(model)), lexicon_(std::move(lexicon)) {
  if (model_.lexicon_hash != lexicon_.hash()) {
    throw InvalidArgument("surrogate model was fitted with a different style lexicon");
  }
}

QualityScores RidgeSurrogate::predict(std::string_view prompt) const {
  return capr::predict(model_, prompt, lexicon_);
}

}  // namespace capr
