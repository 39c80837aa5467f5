#pragma once

#include <atomic>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "listk/domain.hpp"

namespace listk {

using DocSpan = std::span<const Document* const>;

/// Pointer view over a corpus, in storage order. Algorithms work over these
/// so subsets never copy document text.
std::vector<const Document*> doc_ptrs(const Corpus& corpus);

enum class OracleBackendKind { perfect, noisy, remote };

/// Noisy backend: ranks by s' = rho * z + sqrt(1-rho^2) * eps, where z is the
/// rank-normalized true score and eps is a per-document gaussian drawn once
/// per (seed, id). rho = 1 reproduces the perfect backend exactly.
struct NoisyOracleParams {
  double rho = 1.0;
  std::uint64_t seed = 0;
};

/// Remote backend: OpenAI-compatible chat-completions endpoint, temperature 0.
/// The bearer token is read from the environment variable named by auth_env
/// (never from the config file itself).
struct RemoteOracleParams {
  std::string endpoint;  // full URL, e.g. http://host:8080/v1/chat/completions
  std::string model;
  int timeout_ms = 30000;
  int max_retries = 3;        // additional attempts after the first
  std::string auth_env = "LISTK_API_TOKEN";
  std::string log_path;       // optional JSONL call log; empty = no log
};

struct OracleConfig {
  int list_size = 20;  // L, the per-call capacity; must be >= 2
  OracleBackendKind backend = OracleBackendKind::perfect;
  NoisyOracleParams noisy;
  RemoteOracleParams remote;
};

/// Thread-safe call accounting. `calls` counts backend invocations exactly:
/// singleton short-circuits and empty bucket assignments add zero. Rounds are
/// opened by the algorithms between concurrent waves; per_round() reports the
/// call count inside each closed round plus the currently open one.
class OracleStats {
 public:
  void record_call(int items) {
    calls_.fetch_add(1, std::memory_order_relaxed);
    total_items_.fetch_add(items, std::memory_order_relaxed);
  }
  void record_parse_failure() { parse_failures_.fetch_add(1, std::memory_order_relaxed); }
  void new_round() {
    std::lock_guard<std::mutex> lock(marks_mutex_);
    marks_.push_back(calls_.load(std::memory_order_relaxed));
  }
  long long calls() const { return calls_.load(std::memory_order_relaxed); }
  long long total_items() const { return total_items_.load(std::memory_order_relaxed); }
  long long parse_failures() const { return parse_failures_.load(std::memory_order_relaxed); }
  std::size_t rounds_started() const {
    std::lock_guard<std::mutex> lock(marks_mutex_);
    return marks_.size();
  }
  std::vector<long long> per_round() const {
    std::lock_guard<std::mutex> lock(marks_mutex_);
    const long long total = calls_.load(std::memory_order_relaxed);
    std::vector<long long> out;
    if (marks_.empty()) {
      if (total > 0) out.push_back(total);
      return out;
    }
    if (marks_.front() > 0) out.push_back(marks_.front());
    for (std::size_t i = 0; i + 1 < marks_.size(); ++i)
      out.push_back(marks_[i + 1] - marks_[i]);
    out.push_back(total - marks_.back());
    return out;
  }

 private:
  std::atomic<long long> calls_{0};
  std::atomic<long long> total_items_{0};
  std::atomic<long long> parse_failures_{0};
  mutable std::mutex marks_mutex_;
  std::vector<long long> marks_;
};

struct ChatMessage {
  std::string role;
  std::string content;
};

/// Backend contract: return a total order (best first) over exactly the given
/// documents. `known_order_desc` lists 1-based positions whose relative order
/// best-to-worst is already established (bucket pivots); backends may use it
/// as a prompt hint and must never be trusted to respect it — callers
/// re-derive a consistent order from the reply.
class RankBackend {
 public:
  virtual ~RankBackend() = default;
  virtual Ranking rank(const Query& query, DocSpan docs,
                       std::span<const int> known_order_desc) = 0;
};

/// The listwise ranking oracle: counting, validation, and the bucket-assign
/// primitive on top of a pluggable backend. Copies share the backend and the
/// stats; with_list_size() derives a view with a smaller per-call capacity
/// (used to force pairwise L=2 behaviour).
class ListwiseOracle {
 public:
  ListwiseOracle(std::shared_ptr<RankBackend> backend, int list_size);

  int list_size() const { return list_size_; }
  OracleStats& stats() { return *stats_; }
  const OracleStats& stats() const { return *stats_; }
  std::shared_ptr<OracleStats> shared_stats() const { return stats_; }

  /// Total order over docs, best first. Counts one backend call unless
  /// |docs| == 1 (short-circuit). Throws if |docs| is 0, exceeds L, or
  /// contains duplicate ids.
  Ranking rank(const Query& query, DocSpan docs);

  /// Buckets each candidate against pivots given in ascending relevance
  /// order: bucket 0 = below the lowest pivot, |pivots| = above the highest.
  /// One rank() call over pivots+candidates; a self-contradictory reply is
  /// resolved by relabeling the returned pivot slots to the canonical pivot
  /// order. Zero candidates => empty map, zero calls.
  std::unordered_map<DocId, int> bucket_assign(const Query& query,
                                               DocSpan pivots_ascending,
                                               DocSpan candidates);

  /// View with per-call capacity capped to `cap` (same backend, same stats).
  ListwiseOracle with_list_size(int cap) const;

 private:
  std::shared_ptr<RankBackend> backend_;
  std::shared_ptr<OracleStats> stats_;
  int list_size_;
};

/// Ranks by true_score descending, ties by ascending id. Requires scored docs.
class PerfectBackend : public RankBackend {
 public:
  Ranking rank(const Query& query, DocSpan docs, std::span<const int>) override;
};

/// Ranks by the corrupted score s' (see NoisyOracleParams). Scores are fixed
/// per document at construction, so every call in a run is consistent and
/// results do not depend on call order or parallelism.
class NoisyBackend : public RankBackend {
 public:
  NoisyBackend(const Corpus& corpus, NoisyOracleParams params);
  Ranking rank(const Query& query, DocSpan docs, std::span<const int>) override;
  double corrupted_score(DocId id) const;

 private:
  std::unordered_map<DocId, double> score_;
};

/// Builds the chat messages for ranking `docs` against `query`, following the
/// RankLLM listwise template ("I will provide you with {num} passages...",
/// "[{rank}] {candidate}" body lines, "[] > []" output instruction). If
/// known_order_desc is non-empty, a sentence stating the already-known
/// relative order of those positions is appended.
std::vector<ChatMessage> build_rank_prompt(const Query& query, DocSpan docs,
                                           std::span<const int> known_order_desc = {});

/// Parses a model reply into a permutation of input_ids. The reply is
/// validated against ^\[\d+\]( > \[\d+\])*$ and indices are extracted with
/// \[(\d+)\]; extraction is attempted even when strict validation fails.
/// Duplicate indices keep the first occurrence, out-of-range indices are
/// dropped, and missing documents are appended in input order. Returns
/// nullopt when no in-range index can be extracted.
std::optional<Ranking> parse_llm_ranking(const std::string& reply,
                                         std::span<const DocId> input_ids);

/// True iff the reply matches the strict output format exactly.
bool llm_reply_well_formed(const std::string& reply);

/// Constructs an oracle for the given config. `corpus` is required for the
/// noisy backend (rank normalization needs the full score distribution) and
/// ignored otherwise.
ListwiseOracle make_oracle(const OracleConfig& config, const Corpus* corpus = nullptr);

}  // namespace listk
