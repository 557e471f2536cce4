#include "capr/remote.hpp"

#include <chrono>
#include <cmath>
#include <mutex>
#include <thread>
#include <vector>

#include <httplib.h>

#include "capr/capability.hpp"
#include "capr/error.hpp"

namespace capr::remote {

struct JsonEndpoint::Pool {
  std::mutex mu;
  std::vector<std::unique_ptr<httplib::Client>> idle;
};

namespace {

bool transient_status(int status) { return status == 408 || status == 429 || status >= 500; }

}  // namespace

JsonEndpoint::JsonEndpoint(std::string base_url, RemoteOptions options)
    : base_url_(std::move(base_url)), options_(options), pool_(std::make_unique<Pool>()) {
  if (base_url_.empty()) throw InvalidArgument("remote endpoint URL is empty");
  if (options_.max_attempts < 1) throw InvalidArgument("remote max_attempts must be >= 1");
}

JsonEndpoint::~JsonEndpoint() = default;

nlohmann::json JsonEndpoint::call(const std::string& path, const nlohmann::json& request) const {
  std::unique_ptr<httplib::Client> client;
  {
    std::lock_guard lock(pool_->mu);
    if (!pool_->idle.empty()) {
      client = std::move(pool_->idle.back());
      pool_->idle.pop_back();
    }
  }
  if (!client) {
    client = std::make_unique<httplib::Client>(base_url_);
    if (!client->is_valid()) throw InvalidArgument("invalid remote endpoint URL '" + base_url_ + "'");
    const auto timeout = std::chrono::duration<double>(options_.timeout_seconds);
    const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(timeout);
    client->set_connection_timeout(micros);
    client->set_read_timeout(micros);
    client->set_write_timeout(micros);
    client->set_keep_alive(true);
  }

  const std::string body = request.dump();
  const std::string where = base_url_ + path;
  int last_status = 0;
  std::string last_error;
  for (int attempt = 0; attempt < options_.max_attempts; ++attempt) {
    if (attempt > 0) {
      const double delay = options_.backoff_seconds * std::pow(2.0, attempt - 1);
      std::this_thread::sleep_for(std::chrono::duration<double>(delay));
    }
    auto res = client->Post(path, body, "application/json");
    if (!res) {
      last_status = 0;
      last_error = httplib::to_string(res.error());
      continue;
    }
    last_status = res->status;
    if (res->status == 200) {
      nlohmann::json parsed;
      try {
        parsed = nlohmann::json::parse(res->body);
      } catch (const nlohmann::json::parse_error& e) {
        throw DecodeError("malformed JSON from " + where + ": " + e.what());
      }
      std::lock_guard lock(pool_->mu);
      pool_->idle.push_back(std::move(client));
      return parsed;
    }
    last_error = "HTTP " + std::to_string(res->status);
    if (!transient_status(res->status)) break;
  }
  throw BackendError(where, last_status,
                     "request to " + where + " failed after retries: " + last_error);
}

nlohmann::json remote_call(const JsonEndpoint& endpoint, const std::string& path,
                           const nlohmann::json& request) {
  return endpoint.call(path, request);
}

namespace {

template <typename Fn>
auto decode(const std::string& where, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const nlohmann::json::exception& e) {
    throw DecodeError("response from " + where + " does not match the wire schema: " + e.what());
  } catch (const InvalidArgument& e) {
    throw DecodeError("response from " + where + " does not match the wire schema: " + e.what());
  }
}

}  // namespace

ImageRef Generator::generate(const std::string& prompt, std::uint64_t seed, int steps) const {
  const auto res = endpoint_->call("/generate", {{"prompt", prompt}, {"seed", seed}, {"steps", steps}});
  return decode(endpoint_->base_url() + "/generate", [&] {
    ImageRef image{res.at("image_id").get<std::string>(), std::nullopt};
    if (res.contains("features") && !res.at("features").is_null()) {
      image.features = res.at("features").get<std::vector<double>>();
    }
    return image;
  });
}

QualityScores Scorer::score(const std::string& prompt, const ImageRef& image) const {
  const auto res = endpoint_->call("/score", {{"prompt", prompt}, {"image_id", image.image_id}});
  return decode(endpoint_->base_url() + "/score", [&] { return scores_from_json(res); });
}

double Similarity::similarity(std::string_view a, std::string_view b) const {
  const auto res = endpoint_->call("/similarity", {{"text_a", a}, {"text_b", b}});
  const double v = decode(endpoint_->base_url() + "/similarity",
                          [&] { return res.at("similarity").get<double>(); });
  if (!(v >= 0.0 && v <= 1.0)) {
    throw DecodeError("similarity from " + endpoint_->base_url() + " outside [0, 1]");
  }
  return v;
}

std::string Reformulator::reformulate(const ReformulationRequest& request) const {
  const auto res = endpoint_->call("/reformulate", {{"input", request.input}});
  auto out = decode(endpoint_->base_url() + "/reformulate",
                    [&] { return res.at("output").get<std::string>(); });
  if (out.empty()) throw DecodeError("empty reformulation from " + endpoint_->base_url());
  return out;
}

Backends make_backends(const Endpoints& endpoints, const RemoteOptions& options) {
  Backends b;
  b.kind = "remote";
  auto ep = [&](const std::string& url) { return std::make_shared<const JsonEndpoint>(url, options); };
  if (!endpoints.generate.empty()) b.generator = std::make_shared<Generator>(ep(endpoints.generate));
  if (!endpoints.score.empty()) b.scorer = std::make_shared<Scorer>(ep(endpoints.score));
  if (!endpoints.similarity.empty()) b.similarity = std::make_shared<Similarity>(ep(endpoints.similarity));
  if (!endpoints.reformulate.empty()) {
    b.reformulator = std::make_shared<Reformulator>(ep(endpoints.reformulate));
  }
  return b;
}

}  // namespace capr::remote
