#pragma once

// HTTP/JSON clients for generator, scorer, similarity and reformulator
// services. Wire protocol:
//   POST /generate    {prompt, seed, steps}   -> {image_id, features?: [real]}
//   POST /score       {prompt, image_id}      -> {overall, similarity, aesthetic}
//   POST /similarity  {text_a, text_b}        -> {similarity}
//   POST /reformulate {input}                 -> {output}

#include <memory>
#include <string>

#include <json.hpp>

#include "capr/backends.hpp"

namespace capr::remote {

struct RemoteOptions {
  double timeout_seconds = 60.0;
  // Total attempts per call, including the first one.
  int max_attempts = 3;
  // Delay before the second attempt; doubles on every further attempt.
  double backoff_seconds = 0.5;
};

// One service base URL ("http://host:port"). Safe to call from several
// threads; connections are pooled and reused.
class JsonEndpoint {
 public:
  JsonEndpoint(std::string base_url, RemoteOptions options = {});
  ~JsonEndpoint();
  JsonEndpoint(const JsonEndpoint&) = delete;
  JsonEndpoint& operator=(const JsonEndpoint&) = delete;

  // Parsed body on HTTP 200. Connection failures, 408, 429 and 5xx are retried;
  // other statuses fail at once. A 200 with an unparseable body raises
  // DecodeError without retrying.
  nlohmann::json call(const std::string& path, const nlohmann::json& request) const;

  const std::string& base_url() const { return base_url_; }

 private:
  struct Pool;
  std::string base_url_;
  RemoteOptions options_;
  std::unique_ptr<Pool> pool_;
};

nlohmann::json remote_call(const JsonEndpoint& endpoint, const std::string& path,
                           const nlohmann::json& request);

class Generator final : public GeneratorBackend {
 public:
  explicit Generator(std::shared_ptr<const JsonEndpoint> endpoint) : endpoint_(std::move(endpoint)) {}
  ImageRef generate(const std::string& prompt, std::uint64_t seed, int steps) const override;

 private:
  std::shared_ptr<const JsonEndpoint> endpoint_;
};

class Scorer final : public ScorerBackend {
 public:
  explicit Scorer(std::shared_ptr<const JsonEndpoint> endpoint) : endpoint_(std::move(endpoint)) {}
  QualityScores score(const std::string& prompt, const ImageRef& image) const override;

 private:
  std::shared_ptr<const JsonEndpoint> endpoint_;
};

class Similarity final : public TextSimilarity {
 public:
  explicit Similarity(std::shared_ptr<const JsonEndpoint> endpoint) : endpoint_(std::move(endpoint)) {}
  double similarity(std::string_view a, std::string_view b) const override;

 private:
  std::shared_ptr<const JsonEndpoint> endpoint_;
};

// Sends request.input verbatim (the rendered meta-prompt when conditioned).
class Reformulator final : public ReformulatorBackend {
 public:
  explicit Reformulator(std::shared_ptr<const JsonEndpoint> endpoint) : endpoint_(std::move(endpoint)) {}
  std::string reformulate(const ReformulationRequest& request) const override;

 private:
  std::shared_ptr<const JsonEndpoint> endpoint_;
};

struct Endpoints {
  std::string generate;
  std::string score;
  std::string similarity;
  std::string reformulate;
};

// Backends for every configured endpoint; an empty URL leaves that slot null.
Backends make_backends(const Endpoints& endpoints, const RemoteOptions& options);

}  // namespace capr::remote
