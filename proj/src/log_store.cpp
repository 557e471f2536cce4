#include "capr/log_store.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <tuple>

#include "capr/error.hpp"
#include "capr/parallel.hpp"
#include "capr/text.hpp"

namespace capr {

namespace fs = std::filesystem;

std::optional<InteractionRecord> parse_record(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error&) {
    return std::nullopt;
  }
  try {
    return record_from_json(j);
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;
  } catch (const InvalidArgument&) {
    return std::nullopt;
  }
}

InteractionRecord record_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidArgument("record is not a JSON object");
  const auto& user = j.at("user_id");
  const auto& ts = j.at("timestamp");
  const auto& prompt = j.at("prompt");
  if (!user.is_string() || !ts.is_number_integer() || !prompt.is_string()) {
    throw InvalidArgument("record field has the wrong type");
  }
  InteractionRecord r;
  r.user_id = user.get<std::string>();
  r.timestamp = ts.get<std::int64_t>();
  r.prompt = prompt.get<std::string>();
  if (r.timestamp < 0) throw InvalidArgument("negative timestamp");
  if (text::is_blank(r.prompt)) throw InvalidArgument("blank prompt");
  if (auto it = j.find("image_id"); it != j.end() && !it->is_null()) {
    r.image_id = it->get<std::string>();
  }
  if (auto it = j.find("scores"); it != j.end() && !it->is_null()) r.scores = scores_from_json(*it);
  if (auto it = j.find("seed"); it != j.end() && !it->is_null()) {
    if (!it->is_number_integer()) throw InvalidArgument("seed must be an integer");
    r.seed = it->get<std::int64_t>();
  }
  return r;
}

nlohmann::json to_json(const InteractionRecord& r) {
  nlohmann::json j{{"user_id", r.user_id}, {"timestamp", r.timestamp}, {"prompt", r.prompt}};
  if (r.image_id) j["image_id"] = *r.image_id;
  if (r.scores) j["scores"] = to_json(*r.scores);
  if (r.seed) j["seed"] = *r.seed;
  return j;
}

LogStore LogStore::ingest(std::istream& in, IngestReport* report) {
  if (!in) throw IoError("unreadable interaction log stream");
  IngestReport rep;
  LogStore store;
  std::set<std::tuple<std::string, std::int64_t, std::string>> seen;
  std::string line;
  while (std::getline(in, line)) {
    if (text::is_blank(line)) continue;
    auto rec = parse_record(line);
    if (!rec) {
      ++rep.malformed;
      continue;
    }
    if (!seen.emplace(rec->user_id, rec->timestamp, rec->prompt).second) {
      ++rep.duplicates;
      continue;
    }
    store.records_.push_back(std::move(*rec));
  }
  if (in.bad()) throw IoError("I/O error while reading interaction log");
  rep.ingested = store.records_.size();
  if (report) *report = rep;
  if (store.records_.empty()) throw EmptyLogError();
  std::stable_sort(store.records_.begin(), store.records_.end(), [](const auto& a, const auto& b) {
    return std::tie(a.user_id, a.timestamp) < std::tie(b.user_id, b.timestamp);
  });
  return store;
}

std::size_t LogStore::user_count() const {
  std::set<std::string> users;
  for (const auto& r : records_) users.insert(r.user_id);
  return users.size();
}

std::int64_t LogStore::ingested_at() const {
  std::int64_t t = 0;
  for (const auto& r : records_) t = std::max(t, r.timestamp);
  return t;
}

void LogStore::save(const fs::path& dir) const {
  fs::create_directories(dir);
  std::vector<nlohmann::json> rows;
  rows.reserve(records_.size());
  for (const auto& r : records_) rows.push_back(to_json(r));
  write_jsonl(dir / "records.ndjson", rows);
  std::ofstream manifest(dir / "manifest.json");
  if (!manifest) throw IoError("cannot write " + (dir / "manifest.json").string());
  manifest << nlohmann::json{{"record_count", records_.size()},
                             {"users", user_count()},
                             {"ingested_at", ingested_at()}}
                  .dump(2)
           << '\n';
}

LogStore LogStore::load(const fs::path& dir) {
  LogStore store;
  for (const auto& j : read_jsonl(dir / "records.ndjson")) store.records_.push_back(record_from_json(j));
  if (store.records_.empty()) throw EmptyLogError();
  return store;
}

void write_jsonl(const fs::path& path, const std::vector<nlohmann::json>& rows) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& row : rows) out << row.dump() << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<nlohmann::json> read_jsonl(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<nlohmann::json> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::is_blank(line)) continue;
    try {
      rows.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::parse_error& e) {
      throw InvalidArgument(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return rows;
}

std::vector<Session> segment_sessions(const LogStore& store, const TextSimilarity& similarity,
                                      const SegmentationOptions& options) {
  return segment_sessions(store.records(), similarity, options);
}

std::vector<Session> segment_sessions(const std::vector<InteractionRecord>& records,
                                      const TextSimilarity& similarity,
                                      const SegmentationOptions& options) {
  if (options.gap_seconds <= 0) throw InvalidArgument("gap_seconds must be > 0");
  if (!(options.sim_threshold >= 0.0 && options.sim_threshold <= 1.0)) {
    throw InvalidArgument("sim_threshold must lie in [0, 1]");
  }
  // Contiguous per-user ranges of the sorted record list.
  std::vector<std::pair<std::size_t, std::size_t>> users;
  for (std::size_t i = 0; i < records.size();) {
    std::size_t j = i + 1;
    while (j < records.size() && records[j].user_id == records[i].user_id) ++j;
    users.emplace_back(i, j);
    i = j;
  }

  std::vector<std::vector<Session>> per_user(users.size());
  parallel_for(users.size(), options.workers, [&](std::size_t u) {
    const auto [begin, end] = users[u];
    auto& out = per_user[u];
    const auto& user_id = records[begin].user_id;
    for (std::size_t k = begin; k < end; ++k) {
      bool joins = false;
      if (k > begin) {
        const auto& prev = records[k - 1];
        const auto& cur = records[k];
        if (cur.timestamp < prev.timestamp) {
          throw InvalidArgument("records of user '" + user_id + "' are not time-ordered");
        }
        joins = cur.timestamp - prev.timestamp <= options.gap_seconds &&
                similarity.similarity(prev.prompt, cur.prompt) > options.sim_threshold;
      }
      if (!joins) {
        out.push_back({user_id + "#" + std::to_string(out.size()), user_id, {}});
      }
      out.back().records.push_back(records[k]);
    }
  });

  std::vector<Session> sessions;
  for (auto& group : per_user) {
    for (auto& s : group) sessions.push_back(std::move(s));
  }
  return sessions;
}

std::vector<ReformulationPair> extract_pairs(const std::vector<Session>& sessions) {
  std::vector<ReformulationPair> pairs;
  for (const auto& s : sessions) {
    if (s.records.size() < 2) continue;
    const auto& first = s.records.front();
    const auto& last = s.records.back();
    if (first.prompt == last.prompt) continue;
    pairs.push_back({first.prompt, last.prompt, s.session_id, first.scores, last.scores, first.seed,
                     last.seed});
  }
  return pairs;
}

nlohmann::json to_json(const Session& s) {
  nlohmann::json records = nlohmann::json::array();
  for (const auto& r : s.records) records.push_back(to_json(r));
  return {{"session_id", s.session_id}, {"user_id", s.user_id}, {"records", records}};
}

Session session_from_json(const nlohmann::json& j) {
  Session s{j.at("session_id").get<std::string>(), j.at("user_id").get<std::string>(), {}};
  for (const auto& r : j.at("records")) s.records.push_back(record_from_json(r));
  return s;
}

nlohmann::json to_json(const ReformulationPair& p) {
  nlohmann::json j{{"initial_prompt", p.initial_prompt},
                   {"final_prompt", p.final_prompt},
                   {"session_id", p.session_id}};
  if (p.initial_scores) j["initial_scores"] = to_json(*p.initial_scores);
  if (p.final_scores) j["final_scores"] = to_json(*p.final_scores);
  if (p.initial_seed) j["initial_seed"] = *p.initial_seed;
  if (p.final_seed) j["final_seed"] = *p.final_seed;
  return j;
}

ReformulationPair pair_from_json(const nlohmann::json& j) {
  ReformulationPair p;
  p.initial_prompt = j.at("initial_prompt").get<std::string>();
  p.final_prompt = j.at("final_prompt").get<std::string>();
  p.session_id = j.at("session_id").get<std::string>();
  if (j.contains("initial_scores")) p.initial_scores = scores_from_json(j.at("initial_scores"));
  if (j.contains("final_scores")) p.final_scores = scores_from_json(j.at("final_scores"));
  if (j.contains("initial_seed")) p.initial_seed = j.at("initial_seed").get<std::int64_t>();
  if (j.contains("final_seed")) p.final_seed = j.at("final_seed").get<std::int64_t>();
  return p;
}

SessionReport session_report(const std::vector<Session>& sessions, const PromptScorer* scorer,
                             const ScorerBackend* id_scorer) {
  SessionReport report;
  auto resolve = [&](const InteractionRecord& r) -> std::optional<QualityScores> {
    if (r.scores) return r.scores;
    try {
      if (r.image_id && id_scorer && id_scorer->accepts_image_ids()) {
        ++report.backend_calls;
        return id_scorer->score(r.prompt, ImageRef{*r.image_id, std::nullopt});
      }
      if (scorer) {
        ++report.backend_calls;
        return (*scorer)(r.prompt, static_cast<std::uint64_t>(r.seed.value_or(0)));
      }
    } catch (const Error&) {
      return std::nullopt;
    }
    return std::nullopt;
  };
  for (const auto& s : sessions) {
    if (s.records.size() < 2) continue;
    auto initial = resolve(s.records.front());
    auto final_scores = resolve(s.records.back());
    if (!initial || !final_scores) {
      ++report.skipped;
      continue;
    }
    report.rows.push_back({s.session_id, *initial, *final_scores});
  }
  return report;
}

void write_session_report_csv(const SessionReport& report, std::ostream& out) {
  out << "session_id,initial_overall,final_overall,initial_aesthetic,final_aesthetic\n";
  for (const auto& r : report.rows) {
    out << r.session_id << ',' << text::format_double(r.initial.overall) << ','
        << text::format_double(r.final.overall) << ',' << text::format_double(r.initial.aesthetic)
        << ',' << text::format_double(r.final.aesthetic) << '\n';
  }
}

void write_histogram_csv(const SessionReport& report, double bin_width, std::ostream& out) {
  if (!(bin_width > 0.0)) throw InvalidArgument("histogram bin width must be > 0");
  out << "metric,bin_start,bin_end,initial_count,final_count\n";
  auto emit = [&](const char* metric, auto get) {
    std::map<long long, std::pair<std::size_t, std::size_t>> bins;
    for (const auto& r : report.rows) {
      ++bins[static_cast<long long>(std::floor(get(r.initial) / bin_width))].first;
      ++bins[static_cast<long long>(std::floor(get(r.final) / bin_width))].second;
    }
    if (bins.empty()) return;
    for (long long b = bins.begin()->first; b <= bins.rbegin()->first; ++b) {
      const auto it = bins.find(b);
      const auto counts = it == bins.end() ? std::pair<std::size_t, std::size_t>{0, 0} : it->second;
      out << metric << ',' << text::format_double(static_cast<double>(b) * bin_width) << ','
          << text::format_double(static_cast<double>(b + 1) * bin_width) << ',' << counts.first << ','
          << counts.second << '\n';
    }
  };
  emit("overall", [](const QualityScores& s) { return s.overall; });
  emit("aesthetic", [](const QualityScores& s) { return s.aesthetic; });
}

}  // namespace capr
