#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "capr/backends.hpp"
#include "capr/gaussian_process.hpp"
#include "capr/lexicon.hpp"
#include "capr/remote.hpp"
#include "capr/tuner.hpp"

namespace capr {

struct RunConfig {
  std::string backend = "synthetic";
  remote::Endpoints endpoints;
  remote::RemoteOptions remote;
  std::string lexicon_path;  // empty: built-in lexicon

  int k = kDefaultBins;
  std::int64_t gap_seconds = 1200;
  double sim_threshold = 0.1;

  double val_fraction = 0.2;
  int corpus_images_per_prompt = 1;
  double ridge_lambda = 1.0;

  std::size_t budget = 50;
  std::size_t n_initial = 10;
  double xi = 0.01;
  int tune_steps = 20;
  SearchSpace space = SearchSpace::defaults();
  GPHyperparameters gp;

  int images_per_prompt = 4;
  int eval_steps = 50;

  struct Paths {
    std::string store = "store";
    std::string sessions = "sessions.jsonl";
    std::string pairs = "pairs.jsonl";
    std::string corpus = "corpus";
    std::string surrogate = "surrogate.json";
    std::string delta = "delta.json";
    std::string reports = "reports";
    std::string validation_prompts = "validation_prompts.txt";
    std::string test_prompts = "test_prompts.txt";
  } paths;

  int workers = 1;
  std::uint64_t seed = 0;

  void validate() const;
  Lexicon lexicon() const;
  Backends backends() const;
};

// Values present in `j` override the defaults.
RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& c);

}  // namespace capr
