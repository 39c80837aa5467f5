#include "listk/io.hpp"

#include <charconv>
#include <ctime>
#include <fstream>
#include <stdexcept>
#include <unordered_set>

#include <nlohmann/json.hpp>

namespace listk {

using nlohmann::json;

namespace {

json parse_line(const std::string& line, const std::string& path, std::size_t lineno) {
  json j = json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object())
    throw std::runtime_error(path + ":" + std::to_string(lineno) + ": malformed JSON object");
  return j;
}

std::string id_as_string(const json& j, const std::string& path, std::size_t lineno) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number_integer()) return std::to_string(j.get<long long>());
  throw std::runtime_error(path + ":" + std::to_string(lineno) +
                           ": id must be a string or an integer");
}

template <typename Fn>
void for_each_jsonl(const std::string& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    fn(parse_line(line, path, lineno), lineno);
  }
}

}  // namespace

IngestedCorpus load_corpus_jsonl(const std::string& path) {
  std::vector<Document> docs;
  std::vector<std::string> external;
  std::unordered_set<std::string> seen;
  for_each_jsonl(path, [&](const json& j, std::size_t lineno) {
    if (!j.contains("id") || !j.contains("text"))
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": corpus record needs id and text");
    std::string ext = id_as_string(j["id"], path, lineno);
    if (!seen.insert(ext).second)
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": duplicate id " + ext);
    if (!j["text"].is_string())
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": text must be a string");
    Document d;
    d.id = static_cast<DocId>(docs.size());
    d.text = j["text"].get<std::string>();
    if (j.contains("score")) {
      if (!j["score"].is_number())
        throw std::runtime_error(path + ":" + std::to_string(lineno) + ": score must be a number");
      d.true_score = j["score"].get<double>();
    }
    docs.push_back(std::move(d));
    external.push_back(std::move(ext));
  });
  if (docs.empty()) throw std::runtime_error(path + ": empty corpus");
  return IngestedCorpus{Corpus(std::move(docs)), std::move(external)};
}

std::vector<Query> load_queries_jsonl(const std::string& path) {
  std::vector<Query> out;
  std::unordered_set<std::string> seen;
  for_each_jsonl(path, [&](const json& j, std::size_t lineno) {
    if (!j.contains("id") || !j.contains("text") || !j["text"].is_string())
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": query record needs id and text");
    Query q;
    q.id = id_as_string(j["id"], path, lineno);
    if (!seen.insert(q.id).second)
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": duplicate query id " + q.id);
    q.text = j["text"].get<std::string>();
    out.push_back(std::move(q));
  });
  if (out.empty()) throw std::runtime_error(path + ": no queries");
  return out;
}

LabelMap load_labels_jsonl(const std::string& path) {
  LabelMap out;
  for_each_jsonl(path, [&](const json& j, std::size_t lineno) {
    if (!j.contains("query_id") || !j.contains("doc_id") || !j.contains("score") ||
        !j["score"].is_number())
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": label record needs query_id, doc_id, score");
    std::string qid = id_as_string(j["query_id"], path, lineno);
    std::string did = id_as_string(j["doc_id"], path, lineno);
    auto& per_query = out[qid];
    if (!per_query.emplace(did, j["score"].get<double>()).second)
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": duplicate label for (" +
                               qid + ", " + did + ")");
  });
  if (out.empty()) throw std::runtime_error(path + ": no labels");
  return out;
}

void write_results_jsonl(const std::string& path, const std::vector<ResultRecord>& records) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& r : records) {
    json j;
    j["query_id"] = r.query_id;
    j["rank"] = r.rank;
    j["doc_id"] = r.doc_id;
    j["stage_costs"] = json::object();
    for (const auto& [stage, calls] : r.stage_costs) j["stage_costs"][stage] = calls;
    out << j.dump() << "\n";
  }
}

std::vector<ResultRecord> load_results_jsonl(const std::string& path) {
  std::vector<ResultRecord> out;
  for_each_jsonl(path, [&](const json& j, std::size_t lineno) {
    if (!j.contains("query_id") || !j.contains("rank") || !j.contains("doc_id"))
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": result record needs query_id, rank, doc_id");
    ResultRecord r;
    r.query_id = id_as_string(j["query_id"], path, lineno);
    r.rank = j["rank"].get<int>();
    r.doc_id = id_as_string(j["doc_id"], path, lineno);
    if (j.contains("stage_costs"))
      for (const auto& [stage, calls] : j["stage_costs"].items())
        r.stage_costs[stage] = calls.get<long long>();
    out.push_back(std::move(r));
  });
  return out;
}

void write_metrics_csv(const std::string& path, const std::vector<MetricRow>& rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "query_id,metric,k,value\n";
  for (const auto& r : rows)
    out << r.query_id << "," << r.metric << "," << r.k << "," << format_double(r.value) << "\n";
}

OracleConfig load_oracle_config_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  json j = json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object())
    throw std::runtime_error(path + ": malformed oracle config (expected a JSON object)");
  OracleConfig cfg;
  cfg.backend = OracleBackendKind::remote;
  if (j.contains("list_size")) cfg.list_size = j["list_size"].get<int>();
  auto& r = cfg.remote;
  if (!j.contains("endpoint") || !j.contains("model"))
    throw std::runtime_error(path + ": oracle config needs endpoint and model");
  r.endpoint = j["endpoint"].get<std::string>();
  r.model = j["model"].get<std::string>();
  if (j.contains("timeout_ms")) r.timeout_ms = j["timeout_ms"].get<int>();
  if (j.contains("max_retries")) r.max_retries = j["max_retries"].get<int>();
  if (j.contains("auth_env")) r.auth_env = j["auth_env"].get<std::string>();
  if (j.contains("log_path")) r.log_path = j["log_path"].get<std::string>();
  if (r.timeout_ms <= 0) throw std::runtime_error(path + ": timeout_ms must be > 0");
  if (r.max_retries < 0) throw std::runtime_error(path + ": max_retries must be >= 0");
  return cfg;
}

void write_manifest_json(const std::string& path, const RunManifest& m) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  json j;
  j["command"] = m.command;
  j["config"] = json::parse(m.config_json.empty() ? "{}" : m.config_json);
  j["seed"] = m.seed;
  j["started_at"] = m.started_at;
  j["finished_at"] = m.finished_at;
  j["oracle_stats"] = {{"calls", m.oracle_calls},
                       {"total_items", m.oracle_total_items},
                       {"parse_failures", m.parse_failures},
                       {"per_round", m.per_round}};
  j["outputs"] = m.outputs;
  out << j.dump(2) << "\n";
}

std::string utc_now_iso8601() {
  std::time_t now = std::time(nullptr);
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

}  // namespace listk
