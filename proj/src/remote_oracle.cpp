#include "listk/remote_oracle.hpp"

#include <chrono>
#include <cstdlib>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace listk {

using nlohmann::json;

HttpChatClient::HttpChatClient(RemoteOracleParams params) : params_(std::move(params)) {
  // Split scheme://host[:port]/path into base and path.
  const std::string& url = params_.endpoint;
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw std::invalid_argument("remote oracle: endpoint must include a scheme: " + url);
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    base_ = url;
    path_ = "/";
  } else {
    base_ = url.substr(0, path_start);
    path_ = url.substr(path_start);
  }
}

std::string HttpChatClient::complete(const std::vector<ChatMessage>& messages) {
  httplib::Client client(base_);
  client.set_connection_timeout(params_.timeout_ms / 1000, (params_.timeout_ms % 1000) * 1000);
  client.set_read_timeout(params_.timeout_ms / 1000, (params_.timeout_ms % 1000) * 1000);
  client.set_write_timeout(params_.timeout_ms / 1000, (params_.timeout_ms % 1000) * 1000);

  httplib::Headers headers;
  if (!params_.auth_env.empty()) {
    if (const char* token = std::getenv(params_.auth_env.c_str()); token && *token)
      headers.emplace("Authorization", std::string("Bearer ") + token);
  }

  json payload;
  payload["model"] = params_.model;
  payload["temperature"] = 0;
  payload["messages"] = json::array();
  for (const auto& m : messages)
    payload["messages"].push_back({{"role", m.role}, {"content", m.content}});

  auto res = client.Post(path_, headers, payload.dump(), "application/json");
  if (!res)
    throw TransportError("remote oracle: request to " + params_.endpoint + " failed: " +
                         httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300)
    throw TransportError("remote oracle: HTTP " + std::to_string(res->status) + " from " +
                         params_.endpoint);
  json body = json::parse(res->body, nullptr, /*allow_exceptions=*/false);
  if (body.is_discarded() || !body.contains("choices") || body["choices"].empty() ||
      !body["choices"][0].contains("message") ||
      !body["choices"][0]["message"].contains("content"))
    throw MalformedResponse("remote oracle: response body is not a chat completion");
  return body["choices"][0]["message"]["content"].get<std::string>();
}

RemoteBackend::RemoteBackend(std::shared_ptr<ChatClient> client, RemoteOracleParams params)
    : client_(std::move(client)), params_(std::move(params)) {
  if (!client_) throw std::invalid_argument("RemoteBackend: null chat client");
  if (params_.max_retries < 0)
    throw std::invalid_argument("RemoteBackend: max_retries must be >= 0");
  if (!params_.log_path.empty()) {
    log_ = std::make_unique<std::ofstream>(params_.log_path, std::ios::trunc);
    if (!*log_)
      throw std::runtime_error("RemoteBackend: cannot open log file " + params_.log_path);
  }
}

void RemoteBackend::log_attempt(std::size_t list_size, double latency_ms, bool parsed_ok) {
  if (!log_) return;
  json record;
  record["round"] = stats_ ? stats_->rounds_started() : 0;
  record["list_size"] = list_size;
  record["latency_ms"] = latency_ms;
  record["parsed_ok"] = parsed_ok;
  std::lock_guard<std::mutex> lock(log_mutex_);
  *log_ << record.dump() << "\n";
  log_->flush();
}

Ranking RemoteBackend::rank(const Query& query, DocSpan docs,
                            std::span<const int> known_order_desc) {
  if (query.text.empty())
    throw std::invalid_argument("remote oracle: query text must be non-empty");
  const auto messages = build_rank_prompt(query, docs, known_order_desc);
  std::vector<DocId> input_ids;
  input_ids.reserve(docs.size());
  for (const Document* d : docs) input_ids.push_back(d->id);

  for (int attempt = 0; attempt <= params_.max_retries; ++attempt) {
    const bool last = attempt == params_.max_retries;
    std::string reply;
    auto t0 = std::chrono::steady_clock::now();
    try {
      reply = client_->complete(messages);
    } catch (const MalformedResponse&) {
      auto ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0);
      log_attempt(docs.size(), ms.count(), false);
      if (stats_) stats_->record_parse_failure();
      continue;  // same treatment as an unparseable reply
    } catch (const TransportError&) {
      if (last) throw;
      continue;
    }
    auto ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0);
    auto parsed = parse_llm_ranking(reply, input_ids);
    log_attempt(docs.size(), ms.count(), parsed.has_value());
    if (parsed) return *parsed;
    if (stats_) stats_->record_parse_failure();
  }
  // Every attempt produced an unparseable reply: degrade to input order.
  return Ranking{std::move(input_ids)};
}

ListwiseOracle make_remote_oracle(const RemoteOracleParams& params, int list_size,
                                  std::shared_ptr<ChatClient> client) {
  if (!client) client = std::make_shared<HttpChatClient>(params);
  auto backend = std::make_shared<RemoteBackend>(std::move(client), params);
  ListwiseOracle oracle(backend, list_size);
  backend->attach_stats(oracle.shared_stats());
  return oracle;
}

}  // namespace listk
