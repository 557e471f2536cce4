#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "capr/corpus.hpp"
#include "capr/lexicon.hpp"
#include "capr/types.hpp"

namespace capr {

// [bias, phrase_count, token_count, style_term_count, mean_token_length, has_digit]
struct PromptFeatures {
  static constexpr std::size_t kSize = 6;
  static constexpr std::array<const char*, kSize> kNames = {
      "bias", "phrase_count", "token_count", "style_term_count", "mean_token_length", "has_digit"};

  std::array<double, kSize> values{};

  double bias() const { return values[0]; }
  double phrase_count() const { return values[1]; }
  double token_count() const { return values[2]; }
  double style_term_count() const { return values[3]; }
  double mean_token_length() const { return values[4]; }
  double has_digit() const { return values[5]; }
};

PromptFeatures featurize(std::string_view prompt, const Lexicon& lexicon);

// argmin_w ||y - X w||^2 + lambda * sum_{j penalized} w_j^2.
Eigen::VectorXd ridge_solve(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda,
                            const std::vector<bool>& penalized);

// Predicts a prompt's quality scores from its text alone.
class QualityPredictor {
 public:
  virtual ~QualityPredictor() = default;
  virtual QualityScores predict(std::string_view prompt) const = 0;
};

inline constexpr double kDefaultRidgeLambda = 1.0;

struct SurrogateModel {
  using Weights = std::array<double, PromptFeatures::kSize>;

  double lambda = kDefaultRidgeLambda;
  std::uint64_t lexicon_hash = 0;
  Weights overall{};
  Weights similarity{};
  Weights aesthetic{};
  std::size_t n_train = 0;
};

// Closed-form ridge per target, bias unpenalized. Needs >= 2 distinct prompts.
SurrogateModel fit_surrogate(std::span<const ScoredPrompt> samples, const Lexicon& lexicon,
                             double lambda = kDefaultRidgeLambda);
QualityScores predict(const SurrogateModel& model, std::string_view prompt, const Lexicon& lexicon);

nlohmann::json to_json(const SurrogateModel& model);
SurrogateModel surrogate_from_json(const nlohmann::json& j);

class RidgeSurrogate final : public QualityPredictor {
 public:
  // Throws InvalidArgument if the model was fitted with a different lexicon.
  RidgeSurrogate(SurrogateModel model, Lexicon lexicon);
  QualityScores predict(std::string_view prompt) const override;
  const SurrogateModel& model() const { return model_; }

 private:
  SurrogateModel model_;
  Lexicon lexicon_;
};

}  // namespace capr
