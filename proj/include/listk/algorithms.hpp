#pragma once

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "listk/domain.hpp"
#include "listk/oracle.hpp"
#include "listk/rng.hpp"

namespace listk {

enum class PivotStrategy { random, proxy };

/// Pivot plumbing shared by the quickselect/quicksort family. P logical
/// pivots partition each round; P' <= P of them are embedded per oracle call
/// (smaller P' leaves more room for candidates per call). Early stopping only
/// affects selection: once enough documents are known to sit above the
/// current pivot group, lower groups are skipped.
struct PivotConfig {
  int p = 4;
  int p_prime = -1;  // -1 means "same as p"
  bool early_stopping = false;
  PivotStrategy strategy = PivotStrategy::random;
  std::uint64_t seed = 0;

  int resolved_p_prime() const { return p_prime < 0 ? p : p_prime; }
};

/// Tournament filter settings: top `survivors` of each size-L bin advance.
struct FilterConfig {
  int survivors = 1;
  int rounds = 1;
};

/// Cheap stand-in relevance per document (embedding similarity or simulated);
/// consulted only for pivot placement, never for results.
using ProxyScores = std::unordered_map<DocId, double>;

/// Proxy scores correlated with the true scores by roughly `rho` (same
/// corruption model as the noisy oracle). For experiments on synthetic data.
ProxyScores simulated_proxy_scores(const Corpus& corpus, double rho, std::uint64_t seed);

enum class EdgePolicy {
  all_pairs,      // record every implied pair of a ranked list (default)
  adjacent_only,  // record only neighbouring pairs
};

/// Directed graph of resolved comparisons: edge loser -> winner. Vertices
/// with no outgoing edge have never lost and are the candidates of the next
/// tournament. Iteration order is the insertion order, so traversals are
/// deterministic.
class ComparisonGraph {
 public:
  explicit ComparisonGraph(EdgePolicy policy = EdgePolicy::all_pairs) : policy_(policy) {}

  void add_vertex(DocId id);
  void record_ranking(const Ranking& ranking);
  void remove_vertex(DocId id);
  /// Alive vertices with no outgoing edges, in insertion order.
  std::vector<DocId> sources() const;
  /// Every alive vertex, in insertion order.
  std::vector<DocId> alive_vertices() const;
  std::size_t size() const { return alive_count_; }
  bool contains(DocId id) const;
  bool has_edge(DocId loser, DocId winner) const;
  std::size_t out_degree(DocId id) const;
  /// True when the recorded comparisons admit a topological order (always
  /// the case for an oracle that ranks by any fixed total order).
  bool is_acyclic() const;

 private:
  struct Node {
    std::unordered_set<DocId> out;  // vertices this one lost to
    std::unordered_set<DocId> in;   // vertices that lost to this one
    bool alive = false;
  };
  EdgePolicy policy_;
  std::unordered_map<DocId, Node> nodes_;
  std::vector<DocId> order_;  // insertion order for deterministic scans
  std::size_t alive_count_ = 0;
};

/// Per-tournament candidate sets, recorded when a caller wants to audit the
/// "only vertices that lost solely to already-emitted winners re-enter" rule.
struct LtTopkTrace {
  std::vector<std::vector<DocId>> tournament_candidates;
};

/// Tournament top-K: repeated single-elimination tournaments over the
/// comparison graph, one emitted winner each. K > N clamps to N and flags
/// the result. The result is ordered (rank 1 first).
TopKResult lt_topk(const Corpus& corpus, const Query& query, int k, ListwiseOracle& oracle,
                   std::uint64_t seed = 0, int parallelism = 1,
                   EdgePolicy edges = EdgePolicy::all_pairs, LtTopkTrace* trace = nullptr);

/// Monte Carlo tournament filter: shuffles into ceil(N/L) bins, ranks each
/// bin once, keeps the top `survivors` per bin; `rounds` repetitions. Returns
/// the surviving sub-corpus in original corpus order.
Corpus lt_filter(const Corpus& corpus, const Query& query, const FilterConfig& config,
                 ListwiseOracle& oracle, std::uint64_t seed = 0, int parallelism = 1);

/// Multi-pivot quickselect of the top-K set (unordered). Las Vegas: any
/// pivot strategy, P' or early-stopping choice changes only the call count,
/// never the returned set under a consistent oracle.
TopKResult lmpq_select(const Corpus& corpus, const Query& query, int k,
                       const PivotConfig& config, ListwiseOracle& oracle,
                       const ProxyScores* proxy = nullptr, int parallelism = 1);

/// Multi-pivot quicksort into a full descending order.
Ranking lmpq_sort(const Corpus& corpus, const Query& query, const PivotConfig& config,
                  ListwiseOracle& oracle, const ProxyScores* proxy = nullptr,
                  int parallelism = 1);

/// Same, over an explicit item subset (e.g. ordering a selected top-K).
Ranking lmpq_sort_items(const std::vector<const Document*>& items, const Query& query,
                        const PivotConfig& config, ListwiseOracle& oracle,
                        const ProxyScores* proxy = nullptr, int parallelism = 1);

/// Draws `p` pivots from the candidates. random: uniform without
/// replacement. proxy: ranks K..K+P-1 by proxy score when `k_target` is set
/// (selection), else the P evenly spaced quantile ranks floor(i(n+1)/(P+1))
/// (sorting). Returned in draw order, not relevance order.
std::vector<const Document*> select_pivots(const std::vector<const Document*>& candidates,
                                           int p, PivotStrategy strategy,
                                           std::optional<int> k_target,
                                           const ProxyScores* proxy, Rng& rng);

/// One partition round: buckets candidates against pivots (ascending), P' at
/// a time from the highest group down. Bucket index = number of pivots the
/// candidate beats (P+1 buckets total, index P above everything). When early
/// stopping fires, candidates below the last processed group stay merged in
/// the bucket at floor_index.
struct BucketRoundOutcome {
  std::vector<std::vector<const Document*>> buckets;
  int floor_index = 0;  // buckets with index > floor_index are exact
  bool early_stopped = false;
};

BucketRoundOutcome bucket_sort_round(const std::vector<const Document*>& candidates,
                                     const std::vector<const Document*>& pivots_ascending,
                                     int p_prime, long long k_remaining, bool early_stopping,
                                     const Query& query, ListwiseOracle& oracle,
                                     int parallelism = 1);

/// Re-sorts the first `few` entries of a ranking with pairwise (L=2) calls;
/// the tail is untouched. few is clamped to the ranking length; few <= 1 is
/// a no-op with zero calls.
Ranking top_few_refine(const Ranking& ranking, const Corpus& corpus, const Query& query,
                       ListwiseOracle& oracle, int few = 10, std::uint64_t seed = 0,
                       int parallelism = 1);

/// LOTUS-style baseline: quickselect + quicksort with a single pivot and
/// calls forced down to two documents each.
TopKResult pairwise_baseline(const Corpus& corpus, const Query& query, int k,
                             ListwiseOracle& oracle, std::uint64_t seed = 0,
                             int parallelism = 1);

}  // namespace listk
