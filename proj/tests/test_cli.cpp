#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "capr/config.hpp"
#include "capr/error.hpp"
#include "cli_harness.hpp"

using namespace capr;
using cli_harness::run;
namespace fs = std::filesystem;

namespace {

void small_pipeline() {
  REQUIRE(run({"synth", "logs", "--out", "logs.ndjson", "--users", "12", "--sessions-per-user", "4"}).code == 0);
  REQUIRE(run({"ingest", "--input", "logs.ndjson"}).code == 0);
  REQUIRE(run({"sessions"}).code == 0);
  REQUIRE(run({"corpus"}).code == 0);
  REQUIRE(run({"surrogate", "fit"}).code == 0);
  REQUIRE(run({"synth", "prompts", "--out", "validation_prompts.txt", "--count", "10"}).code == 0);
  REQUIRE(run({"synth", "prompts", "--out", "test_prompts.txt", "--count", "10", "--seed", "1"}).code == 0);
}

}  // namespace

TEST_CASE("help and usage errors") {
  const auto help = run({"--help"});
  CHECK(help.code == cli::kExitOk);
  for (const char* sub : {"ingest", "sessions", "report", "corpus", "surrogate", "tune", "eval", "sweep",
                          "reformulate"}) {
    CHECK(help.out.find(sub) != std::string::npos);
  }
  const auto tune_help = run({"tune", "--help"});
  CHECK(tune_help.code == cli::kExitOk);
  CHECK(tune_help.out.find("--budget") != std::string::npos);

  const auto unknown = run({"frobnicate"});
  CHECK(unknown.code == cli::kExitUsage);
  CHECK(unknown.err.find("Subcommands") != std::string::npos);

  CHECK(run({}).code == cli::kExitUsage);
  CHECK(run({"reformulate"}).code == cli::kExitUsage);
  CHECK(run({"tune", "--budget", "zero"}).code == cli::kExitUsage);
  CHECK(run({"--backend", "carrier-pigeon", "reformulate", "--prompt", "x"}).code == cli::kExitUsage);
}

TEST_CASE("runtime errors exit with 2") {
  cli_harness::ScopedDir dir("capr_cli_runtime");
  std::ofstream("bad.json") << R"({"backend": 3})";
  CHECK(run({"--config", "bad.json", "reformulate", "--prompt", "x"}).code == cli::kExitRuntime);
  std::ofstream("empty.ndjson") << "\n";
  CHECK(run({"ingest", "--input", "empty.ndjson"}).code == cli::kExitRuntime);
}

TEST_CASE("reformulate is deterministic") {
  cli_harness::ScopedDir dir("capr_cli_reformulate");
  CHECK(run({"reformulate", "--prompt", "a cat"}).code == cli::kExitUsage);  // no surrogate yet
  small_pipeline();
  const auto a = run({"reformulate", "--prompt", "a cat"});
  const auto b = run({"reformulate", "--prompt", "a cat"});
  CHECK(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(a.out.rfind("a cat", 0) == 0);
}

TEST_CASE("explicit default segmentation flags reproduce the defaults") {
  cli_harness::ScopedDir dir("capr_cli_sessions");
  REQUIRE(run({"synth", "logs", "--out", "logs.ndjson", "--users", "8"}).code == 0);
  REQUIRE(run({"ingest", "--input", "logs.ndjson"}).code == 0);
  REQUIRE(run({"sessions"}).code == 0);
  const auto implicit = oracle::slurp("sessions.jsonl") + oracle::slurp("pairs.jsonl");
  REQUIRE(run({"sessions", "--gap-seconds", "1200", "--sim-threshold", "0.1"}).code == 0);
  CHECK(oracle::slurp("sessions.jsonl") + oracle::slurp("pairs.jsonl") == implicit);
  REQUIRE(run({"sessions", "--sim-threshold", "0.6"}).code == 0);
  CHECK(oracle::slurp("sessions.jsonl") + oracle::slurp("pairs.jsonl") != implicit);
}

TEST_CASE("tune respects the budget and config files are honored") {
  cli_harness::ScopedDir dir("capr_cli_tune");
  small_pipeline();
  const auto r = run({"tune", "--budget", "20"});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(oracle::slurp("delta.json"));
  CHECK(j.at("calls_used").get<int>() <= 20);
  CHECK(j.at("budget") == 20);
  CHECK(j.at("best_delta").at("overall") == 9);

  std::ofstream("cfg.json") << R"({"tuner": {"budget": 12, "n_initial": 4}, "paths": {"delta": "d2.json"}})";
  REQUIRE(run({"--config", "cfg.json", "tune"}).code == 0);
  const auto j2 = nlohmann::json::parse(oracle::slurp("d2.json"));
  CHECK(j2.at("calls_used") == 12);

  ::setenv("CAPR_CONFIG", "cfg.json", 1);
  REQUIRE(run({"tune", "--out", "d3.json", "--budget", "11"}).code == 0);
  ::unsetenv("CAPR_CONFIG");
  const auto j3 = nlohmann::json::parse(oracle::slurp("d3.json"));
  CHECK(j3.at("calls_used") == 11);

  // Worker count does not change results.
  REQUIRE(run({"eval"}).code == 0);
  const auto serial = oracle::slurp("reports/report.json");
  REQUIRE(run({"--workers", "4", "eval"}).code == 0);
  CHECK(oracle::slurp("reports/report.json") == serial);
}

TEST_CASE("config round-trip and validation") {
  RunConfig c;
  c.seed = 9;
  c.space.length = {1, 7};
  const auto back = config_from_json(to_json(c));
  CHECK(back.seed == 9);
  CHECK(back.space.length.lo == 1);
  CHECK(back.space.length.hi == 7);
  CHECK(to_json(back) == to_json(c));
  CHECK_THROWS_AS(config_from_json({{"quantizer", {{"k", 1}}}}), InvalidArgument);
  CHECK_THROWS_AS(config_from_json({{"backend", "cloud"}}), InvalidArgument);
  CHECK_THROWS_AS(config_from_json({{"tuner", {{"bounds", {{"length", {1}}}}}}}), InvalidArgument);
}
