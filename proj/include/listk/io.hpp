#pragma once

#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "listk/domain.hpp"
#include "listk/oracle.hpp"

namespace listk {

/// A corpus read from JSONL plus the mapping back to the ids the file used.
/// Internal ids are the 0-based line positions; `external_ids[i]` is the
/// file's id (stringified when numeric) for internal id i.
struct IngestedCorpus {
  Corpus corpus;
  std::vector<std::string> external_ids;
};

/// Reads one {"id": ..., "text": ..., "score"?: ...} object per line.
/// Errors on malformed JSON, missing fields, duplicate external ids, or a
/// mix of scored and unscored lines.
IngestedCorpus load_corpus_jsonl(const std::string& path);

/// Reads one {"id": ..., "text": ...} object per line.
std::vector<Query> load_queries_jsonl(const std::string& path);

/// query id -> (external doc id -> relevance score), from JSONL records
/// {"query_id": ..., "doc_id": ..., "score": ...}.
using LabelMap = std::map<std::string, std::unordered_map<std::string, double>>;
LabelMap load_labels_jsonl(const std::string& path);

/// One emitted result row: rank is 1-based, doc_id is the external id, and
/// stage_costs maps stage name -> oracle calls spent in that stage.
struct ResultRecord {
  std::string query_id;
  int rank = 0;
  std::string doc_id;
  std::map<std::string, long long> stage_costs;
};

void write_results_jsonl(const std::string& path, const std::vector<ResultRecord>& records);
std::vector<ResultRecord> load_results_jsonl(const std::string& path);

struct MetricRow {
  std::string query_id;
  std::string metric;
  int k = 0;
  double value = 0.0;
};

/// Writes `query_id,metric,k,value` rows under that exact header.
void write_metrics_csv(const std::string& path, const std::vector<MetricRow>& rows);

/// Oracle settings from a JSON config file: {"endpoint", "model",
/// "timeout_ms", "max_retries", "auth_env", "list_size"?, "log_path"?}.
/// Only connection settings live here; the auth token itself always comes
/// from the named environment variable.
OracleConfig load_oracle_config_json(const std::string& path);

/// Everything needed to reproduce a CLI invocation.
struct RunManifest {
  std::string command;                  // argv joined
  std::string config_json;              // resolved options, serialized
  std::uint64_t seed = 0;
  std::string started_at;               // ISO 8601 UTC
  std::string finished_at;
  long long oracle_calls = 0;
  long long oracle_total_items = 0;
  long long parse_failures = 0;
  std::vector<long long> per_round;
  std::vector<std::string> outputs;     // paths written by the run
};

void write_manifest_json(const std::string& path, const RunManifest& manifest);

/// Current UTC time as ISO 8601 (manifest timestamps).
std::string utc_now_iso8601();

/// Shortest round-trip decimal rendering; the one formatting used for every
/// number we emit, so equal doubles always produce equal bytes.
std::string format_double(double v);

}  // namespace listk
