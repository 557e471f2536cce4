#include <doctest.h>

#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "capr/backends.hpp"
#include "capr/error.hpp"
#include "capr/log_store.hpp"
#include "capr/synthetic.hpp"
#include "oracles.hpp"

using namespace capr;
namespace fs = std::filesystem;

namespace {

class FnSimilarity final : public TextSimilarity {
 public:
  explicit FnSimilarity(std::function<double(std::string_view, std::string_view)> fn)
      : fn_(std::move(fn)) {}
  double similarity(std::string_view a, std::string_view b) const override { return fn_(a, b); }

 private:
  std::function<double(std::string_view, std::string_view)> fn_;
};

InteractionRecord rec(std::string user, std::int64_t ts, std::string prompt) {
  InteractionRecord r;
  r.user_id = std::move(user);
  r.timestamp = ts;
  r.prompt = std::move(prompt);
  return r;
}

std::vector<std::size_t> sizes(const std::vector<Session>& sessions) {
  std::vector<std::size_t> out;
  for (const auto& s : sessions) out.push_back(s.records.size());
  return out;
}

fs::path temp_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("capr_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("ingest examples") {
  IngestReport rep;
  std::istringstream three(
      R"({"user_id":"u","timestamp":3,"prompt":"c"})"
      "\n"
      R"({"user_id":"u","timestamp":1,"prompt":"a"})"
      "\n\n"
      R"({"user_id":"t","timestamp":2,"prompt":"b"})"
      "\n");
  auto store = LogStore::ingest(three, &rep);
  CHECK(rep.ingested == 3);
  CHECK(rep.skipped() == 0);
  REQUIRE(store.records().size() == 3);
  CHECK(store.records()[0].user_id == "t");
  CHECK(store.records()[1].prompt == "a");
  CHECK(store.records()[2].prompt == "c");
  CHECK(store.user_count() == 2);
  CHECK(store.ingested_at() == 3);

  std::istringstream missing(
      R"({"user_id":"u","timestamp":1,"prompt":"a"})"
      "\n"
      R"({"user_id":"u","timestamp":2})"
      "\n"
      R"({"user_id":"u","timestamp":3,"prompt":"b"})");
  LogStore::ingest(missing, &rep);
  CHECK(rep.ingested == 2);
  CHECK(rep.skipped() == 1);
  CHECK(rep.malformed == 1);

  const std::string line = R"({"user_id":"u","timestamp":1,"prompt":"a"})";
  std::istringstream dup(line + "\n" + line + "\n");
  LogStore::ingest(dup, &rep);
  CHECK(rep.ingested == 1);
  CHECK(rep.skipped() == 1);
  CHECK(rep.duplicates == 1);
}

TEST_CASE("ingest rejects invalid fields and empty logs") {
  IngestReport rep;
  std::istringstream bad(
      "not json\n"
      R"({"user_id":"u","timestamp":-1,"prompt":"a"})"
      "\n"
      R"({"user_id":"u","timestamp":1,"prompt":"   "})"
      "\n"
      R"({"user_id":"u","timestamp":"1","prompt":"a"})"
      "\n"
      R"([1,2])"
      "\n");
  CHECK_THROWS_AS(LogStore::ingest(bad, &rep), EmptyLogError);
  std::istringstream empty("");
  CHECK_THROWS_AS(LogStore::ingest(empty), EmptyLogError);
  std::istringstream broken;
  broken.setstate(std::ios::badbit);
  CHECK_THROWS_AS(LogStore::ingest(broken), IoError);
}

TEST_CASE("equal timestamps keep input order") {
  std::istringstream in(
      R"({"user_id":"u","timestamp":5,"prompt":"second"})"
      "\n"
      R"({"user_id":"u","timestamp":5,"prompt":"third"})"
      "\n"
      R"({"user_id":"u","timestamp":1,"prompt":"first"})");
  const auto store = LogStore::ingest(in);
  CHECK(store.records()[0].prompt == "first");
  CHECK(store.records()[1].prompt == "second");
  CHECK(store.records()[2].prompt == "third");
}

TEST_CASE("store save/load round-trip") {
  std::istringstream in(
      R"({"user_id":"u","timestamp":5,"prompt":"a","seed":3,"image_id":"i","scores":{"overall":0.5,"similarity":0.25,"aesthetic":0.75}})"
      "\n"
      R"({"user_id":"v","timestamp":9,"prompt":"b"})");
  const auto store = LogStore::ingest(in);
  const auto dir = temp_dir("store");
  store.save(dir);
  const auto back = LogStore::load(dir);
  CHECK(back.records() == store.records());
  const auto manifest = nlohmann::json::parse(oracle::slurp((dir / "manifest.json").string()));
  CHECK(manifest.at("record_count") == 2);
  CHECK(manifest.at("users") == 2);
  CHECK(manifest.at("ingested_at") == 9);
  CHECK_THROWS_AS(LogStore::load(dir / "missing"), IoError);
  fs::remove_all(dir);
}

TEST_CASE("segmentation examples") {
  const FnSimilarity half([](auto, auto) { return 0.5; });
  const FnSimilarity low([](auto, auto) { return 0.05; });
  const std::vector<InteractionRecord> three = {rec("u", 0, "a"), rec("u", 600, "b"),
                                                rec("u", 900, "c")};
  CHECK(sizes(segment_sessions(three, half)) == std::vector<std::size_t>{3});

  const std::vector<InteractionRecord> gap = {rec("u", 0, "a"), rec("u", 1500, "b")};
  CHECK(sizes(segment_sessions(gap, half)) == std::vector<std::size_t>{1, 1});

  const std::vector<InteractionRecord> dissimilar = {rec("u", 0, "a"), rec("u", 600, "b")};
  CHECK(sizes(segment_sessions(dissimilar, low)) == std::vector<std::size_t>{1, 1});

  // Inclusive gap, strict similarity.
  const FnSimilarity exact([](auto, auto) { return 0.1; });
  const std::vector<InteractionRecord> edge = {rec("u", 0, "a"), rec("u", 1200, "b")};
  CHECK(sizes(segment_sessions(edge, half)) == std::vector<std::size_t>{2});
  CHECK(sizes(segment_sessions(edge, exact)) == std::vector<std::size_t>{1, 1});

  // Different users never share a session.
  const std::vector<InteractionRecord> users = {rec("u", 0, "a"), rec("v", 10, "a")};
  const auto s = segment_sessions(users, half);
  REQUIRE(s.size() == 2);
  CHECK(s[0].session_id == "u#0");
  CHECK(s[1].session_id == "v#0");
}

TEST_CASE("jaccard similarity") {
  JaccardSimilarity j;
  CHECK(j.similarity("a b c", "A b d") == doctest::Approx(0.5));
  CHECK(j.similarity("a b", "a b") == 1.0);
  CHECK(j.similarity("a", "b") == 0.0);
  CHECK(j.similarity("cat,", "cat") == 0.0);  // punctuation kept
  CHECK(j.similarity("x y", "y x") == j.similarity("y x", "x y"));
}

TEST_CASE("segmentation is a partition and monotone in its thresholds") {
  std::mt19937_64 rng(99);
  const JaccardSimilarity jac;
  const std::vector<std::string> vocab = {"cat", "dog", "red", "blue", "sky", "4k", "art", "sea"};
  for (int trial = 0; trial < 60; ++trial) {
    std::vector<InteractionRecord> recs;
    for (int u = 0; u < 3; ++u) {
      std::int64_t t = 0;
      const int n = 1 + static_cast<int>(rng() % 15);
      for (int i = 0; i < n; ++i) {
        t += static_cast<std::int64_t>(rng() % 2500);
        std::string p;
        for (int w = 0; w < 3; ++w) p += vocab[rng() % vocab.size()] + " ";
        recs.push_back(rec("u" + std::to_string(u), t, p));
      }
    }
    const auto base = segment_sessions(recs, jac, {1200, 0.1, 1});
    std::vector<InteractionRecord> flat;
    for (const auto& s : base) {
      REQUIRE_FALSE(s.records.empty());
      for (std::size_t i = 0; i < s.records.size(); ++i) {
        CHECK(s.records[i].user_id == s.user_id);
        if (i) {
          CHECK(s.records[i].timestamp - s.records[i - 1].timestamp <= 1200);
          CHECK(jac.similarity(s.records[i - 1].prompt, s.records[i].prompt) > 0.1);
        }
        flat.push_back(s.records[i]);
      }
    }
    CHECK(flat == recs);
    CHECK(segment_sessions(recs, jac, {1200, 0.1, 4}).size() == base.size());
    CHECK(segment_sessions(recs, jac, {1200, 0.4, 1}).size() >= base.size());
    CHECK(segment_sessions(recs, jac, {600, 0.1, 1}).size() >= base.size());
    CHECK(extract_pairs(base).size() <= base.size());
  }
}

TEST_CASE("extract_pairs examples") {
  auto session = [](std::vector<std::string> prompts) {
    Session s{"u#0", "u", {}};
    std::int64_t t = 0;
    for (auto& p : prompts) s.records.push_back(rec("u", t++, p));
    return s;
  };
  auto pairs = extract_pairs({session({"p1", "p2", "p3"})});
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0].initial_prompt == "p1");
  CHECK(pairs[0].final_prompt == "p3");
  CHECK(pairs[0].session_id == "u#0");
  CHECK(extract_pairs({session({"p1"})}).empty());
  CHECK(extract_pairs({session({"p1", "p1"})}).empty());
}

TEST_CASE("session and pair JSON round-trip") {
  Session s{"u#1", "u", {rec("u", 1, "a"), rec("u", 2, "b")}};
  s.records[0].seed = 4;
  const auto back = session_from_json(to_json(s));
  CHECK(back.session_id == s.session_id);
  CHECK(back.records == s.records);
  ReformulationPair p{"a", "b", "u#1", QualityScores{1, 2, 3}, std::nullopt, 4, std::nullopt};
  const auto pb = pair_from_json(to_json(p));
  CHECK(pb.initial_prompt == "a");
  CHECK(pb.initial_scores == p.initial_scores);
  CHECK_FALSE(pb.final_scores);
  CHECK(pb.initial_seed == 4);
}

TEST_CASE("session report with precomputed scores makes no backend calls") {
  auto scored = [](std::string user, std::int64_t ts, double o, double a) {
    auto r = rec(user, ts, "p" + std::to_string(ts));
    r.scores = QualityScores{o, 0.5, a};
    return r;
  };
  std::vector<Session> sessions = {
      {"u#0", "u", {scored("u", 0, 0.1, 0.2), scored("u", 1, 0.3, 0.4)}},
      {"u#1", "u", {scored("u", 5000, 0.5, 0.6)}},
      {"v#0", "v", {scored("v", 0, 0.7, 0.8), scored("v", 1, 0.9, 0.05)}},
  };
  const auto report = session_report(sessions, nullptr);
  CHECK(report.backend_calls == 0);
  CHECK(report.skipped == 0);
  REQUIRE(report.rows.size() == 2);
  std::ostringstream csv;
  write_session_report_csv(report, csv);
  CHECK(csv.str() ==
        "session_id,initial_overall,final_overall,initial_aesthetic,final_aesthetic\n"
        "u#0,0.1,0.3,0.2,0.4\n"
        "v#0,0.7,0.9,0.8,0.05\n");

  std::ostringstream hist;
  write_histogram_csv(report, 0.5, hist);
  CHECK(hist.str() ==
        "metric,bin_start,bin_end,initial_count,final_count\n"
        "overall,0,0.5,1,1\n"
        "overall,0.5,1,1,1\n"
        "aesthetic,0,0.5,1,2\n"
        "aesthetic,0.5,1,1,0\n");
  CHECK_THROWS_AS(write_histogram_csv(report, 0.0, hist), InvalidArgument);

  // Unscored sessions without a backend are skipped and counted.
  std::vector<Session> bare = {{"w#0", "w", {rec("w", 0, "a"), rec("w", 1, "b")}}};
  const auto skipped = session_report(bare, nullptr);
  CHECK(skipped.rows.empty());
  CHECK(skipped.skipped == 1);
}

TEST_CASE("session report through the synthetic backend") {
  const auto lex = Lexicon::builtin();
  synthetic::Generator gen(lex);
  synthetic::Scorer scorer;
  PromptScorer ps(gen, scorer);
  std::vector<Session> sessions;
  for (int i = 0; i < 10; ++i) {
    auto a = rec("u", i * 10000, "a cat " + std::to_string(i));
    auto b = rec("u", i * 10000 + 60, "a cat " + std::to_string(i) + ", digital art, 4k");
    a.seed = i;
    b.seed = 100 + i;
    sessions.push_back({"u#" + std::to_string(i), "u", {a, b}});
  }
  const auto report = session_report(sessions, &ps, &scorer);
  REQUIRE(report.rows.size() == 10);
  CHECK(report.backend_calls == 20);
  for (std::size_t i = 0; i < 10; ++i) {
    const auto& r = sessions[i].records;
    const auto fi = synthetic::features_of(gen.generate(r[0].prompt, *r[0].seed, 50));
    const auto ff = synthetic::features_of(gen.generate(r[1].prompt, *r[1].seed, 50));
    const auto oi = oracle::synth(0, 1, fi.noise);
    const auto of = oracle::synth(2, 3, ff.noise);
    CHECK(report.rows[i].initial.overall == doctest::Approx(oi.overall).epsilon(1e-12));
    CHECK(report.rows[i].final.overall == doctest::Approx(of.overall).epsilon(1e-12));
    CHECK(report.rows[i].final.aesthetic == doctest::Approx(of.aesthetic).epsilon(1e-12));
  }
}
