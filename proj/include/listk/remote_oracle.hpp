#pragma once

#include <fstream>
#include <memory>
#include <mutex>
#include <stdexcept>

#include "listk/oracle.hpp"

namespace listk {

/// Connection-level failure (unreachable endpoint, non-2xx status). Retried;
/// exhausting retries propagates the error.
struct TransportError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Syntactically unusable completion (no content field, bad JSON). Treated
/// like a parse failure: retried, then the call falls back to input order.
struct MalformedResponse : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Transport abstraction over the chat-completions API so tests can script
/// replies without a network.
class ChatClient {
 public:
  virtual ~ChatClient() = default;
  /// Returns the assistant message text for one completion request.
  virtual std::string complete(const std::vector<ChatMessage>& messages) = 0;
};

/// Talks to an OpenAI-compatible /chat/completions endpoint with temperature
/// 0. The bearer token, if any, comes from the environment variable named in
/// the params.
class HttpChatClient : public ChatClient {
 public:
  explicit HttpChatClient(RemoteOracleParams params);
  std::string complete(const std::vector<ChatMessage>& messages) override;

 private:
  RemoteOracleParams params_;
  std::string base_;  // scheme://host[:port]
  std::string path_;  // /v1/chat/completions
};

/// Listwise ranking via an LLM endpoint. Each rank call builds the listwise
/// prompt, requests a completion, and parses the "[a] > [b] > ..." reply.
/// Parse failures retry up to max_retries and then fall back to input order;
/// transport failures retry and then propagate. Every attempt is logged as a
/// JSONL record {round, list_size, latency_ms, parsed_ok} when log_path is
/// configured.
class RemoteBackend : public RankBackend {
 public:
  RemoteBackend(std::shared_ptr<ChatClient> client, RemoteOracleParams params);
  Ranking rank(const Query& query, DocSpan docs,
               std::span<const int> known_order_desc) override;
  void attach_stats(std::shared_ptr<OracleStats> stats) { stats_ = std::move(stats); }

 private:
  void log_attempt(std::size_t list_size, double latency_ms, bool parsed_ok);

  std::shared_ptr<ChatClient> client_;
  RemoteOracleParams params_;
  std::shared_ptr<OracleStats> stats_;
  std::unique_ptr<std::ofstream> log_;
  std::mutex log_mutex_;
};

/// Builds a remote-backed oracle. Passing a client overrides the default
/// HTTP transport (used by tests).
ListwiseOracle make_remote_oracle(const RemoteOracleParams& params, int list_size,
                                  std::shared_ptr<ChatClient> client = nullptr);

}  // namespace listk
