#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "capr/backends.hpp"
#include "capr/capability.hpp"
#include "capr/types.hpp"

namespace capr {

struct IngestReport {
  std::size_t ingested = 0;
  std::size_t malformed = 0;
  std::size_t duplicates = 0;

  std::size_t skipped() const { return malformed + duplicates; }
};

// Interaction records sorted by (user_id, timestamp); equal timestamps keep
// input order.
class LogStore {
 public:
  // Throws IoError on a bad stream and EmptyLogError when nothing valid remains.
  static LogStore ingest(std::istream& in, IngestReport* report = nullptr);

  // Writes records.ndjson and manifest.json into `dir` (created if needed).
  void save(const std::filesystem::path& dir) const;
  static LogStore load(const std::filesystem::path& dir);

  const std::vector<InteractionRecord>& records() const { return records_; }
  std::size_t user_count() const;
  // Latest record timestamp; the store's logical ingestion time.
  std::int64_t ingested_at() const;

 private:
  std::vector<InteractionRecord> records_;
};

// Parses one NDJSON record; nullopt if required fields are missing or invalid.
std::optional<InteractionRecord> parse_record(const std::string& line);
nlohmann::json to_json(const InteractionRecord& r);
InteractionRecord record_from_json(const nlohmann::json& j);

inline constexpr std::int64_t kDefaultGapSeconds = 1200;
inline constexpr double kDefaultSimThreshold = 0.1;

struct SegmentationOptions {
  std::int64_t gap_seconds = kDefaultGapSeconds;
  double sim_threshold = kDefaultSimThreshold;
  int workers = 1;
};

// Adjacent records of one user share a session iff the gap is <= gap_seconds
// and their prompt similarity is strictly above sim_threshold.
std::vector<Session> segment_sessions(const LogStore& store, const TextSimilarity& similarity,
                                      const SegmentationOptions& options = {});
std::vector<Session> segment_sessions(const std::vector<InteractionRecord>& sorted_records,
                                      const TextSimilarity& similarity,
                                      const SegmentationOptions& options = {});

// (first, last) of every session with >= 2 records and first != last.
std::vector<ReformulationPair> extract_pairs(const std::vector<Session>& sessions);

nlohmann::json to_json(const Session& s);
Session session_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ReformulationPair& p);
ReformulationPair pair_from_json(const nlohmann::json& j);

void write_jsonl(const std::filesystem::path& path, const std::vector<nlohmann::json>& rows);
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);

struct SessionReportRow {
  std::string session_id;
  QualityScores initial;
  QualityScores final;
};

struct SessionReport {
  std::vector<SessionReportRow> rows;
  std::size_t skipped = 0;  // sessions whose scores could not be resolved
  std::size_t backend_calls = 0;
};

// Precomputed record scores when present, otherwise generate-then-score with
// the record's seed (or its image id, for scorers that accept one). `scorer`
// may be null, in which case unscored sessions are skipped.
SessionReport session_report(const std::vector<Session>& sessions, const PromptScorer* scorer,
                             const ScorerBackend* id_scorer = nullptr);

// Columns: session_id,initial_overall,final_overall,initial_aesthetic,final_aesthetic
void write_session_report_csv(const SessionReport& report, std::ostream& out);
// Columns: metric,bin_start,bin_end,initial_count,final_count
void write_histogram_csv(const SessionReport& report, double bin_width, std::ostream& out);

}  // namespace capr
