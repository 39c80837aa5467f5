#include "listk/algorithms.hpp"

#include <algorithm>
#include <cassert>
#include <stdexcept>

#include "listk/parallel.hpp"

namespace listk {

namespace {

std::vector<const Document*> docs_for(const Corpus& corpus, const std::vector<DocId>& ids) {
  std::vector<const Document*> out;
  out.reserve(ids.size());
  for (DocId id : ids) out.push_back(&corpus.by_id(id));
  return out;
}

void validate_pivot_config(const PivotConfig& cfg, int list_size) {
  if (cfg.p < 1) throw std::invalid_argument("PivotConfig: p must be >= 1");
  if (cfg.p >= list_size)
    throw std::invalid_argument("PivotConfig: p must be < oracle list_size");
  int pp = cfg.resolved_p_prime();
  if (pp < 1 || pp > cfg.p)
    throw std::invalid_argument("PivotConfig: p_prime must be in [1, p]");
  if (pp >= list_size)
    throw std::invalid_argument("PivotConfig: p_prime must leave room for candidates");
}

}  // namespace

ProxyScores simulated_proxy_scores(const Corpus& corpus, double rho, std::uint64_t seed) {
  NoisyBackend backend(corpus, NoisyOracleParams{rho, seed});
  ProxyScores out;
  out.reserve(corpus.size());
  for (const auto& d : corpus.docs()) out[d.id] = backend.corrupted_score(d.id);
  return out;
}

// ---------------------------------------------------------------------------
// Comparison graph
// ---------------------------------------------------------------------------

void ComparisonGraph::add_vertex(DocId id) {
  auto [it, inserted] = nodes_.try_emplace(id);
  if (!inserted && it->second.alive) return;
  it->second.alive = true;
  order_.push_back(id);
  ++alive_count_;
}

bool ComparisonGraph::contains(DocId id) const {
  auto it = nodes_.find(id);
  return it != nodes_.end() && it->second.alive;
}

std::size_t ComparisonGraph::out_degree(DocId id) const {
  auto it = nodes_.find(id);
  return it == nodes_.end() ? 0 : it->second.out.size();
}

bool ComparisonGraph::has_edge(DocId loser, DocId winner) const {
  auto it = nodes_.find(loser);
  return it != nodes_.end() && it->second.out.count(winner) > 0;
}

void ComparisonGraph::record_ranking(const Ranking& ranking) {
  const auto& ids = ranking.ids;
  auto add_edge = [&](DocId loser, DocId winner) {
    auto li = nodes_.find(loser);
    auto wi = nodes_.find(winner);
    if (li == nodes_.end() || wi == nodes_.end() || !li->second.alive || !wi->second.alive)
      throw std::invalid_argument("ComparisonGraph: ranking mentions unknown vertex");
    if (li->second.out.insert(winner).second) wi->second.in.insert(loser);
  };
  if (policy_ == EdgePolicy::all_pairs) {
    for (std::size_t i = 0; i < ids.size(); ++i)
      for (std::size_t j = i + 1; j < ids.size(); ++j) add_edge(ids[j], ids[i]);
  } else {
    for (std::size_t i = 0; i + 1 < ids.size(); ++i) add_edge(ids[i + 1], ids[i]);
  }
}

void ComparisonGraph::remove_vertex(DocId id) {
  auto it = nodes_.find(id);
  if (it == nodes_.end() || !it->second.alive) return;
  for (DocId loser : it->second.in) {
    auto li = nodes_.find(loser);
    if (li != nodes_.end()) li->second.out.erase(id);
  }
  for (DocId winner : it->second.out) {
    auto wi = nodes_.find(winner);
    if (wi != nodes_.end()) wi->second.in.erase(id);
  }
  it->second.alive = false;
  it->second.in.clear();
  it->second.out.clear();
  --alive_count_;
}

std::vector<DocId> ComparisonGraph::sources() const {
  std::vector<DocId> out;
  for (DocId id : order_) {
    auto it = nodes_.find(id);
    if (it != nodes_.end() && it->second.alive && it->second.out.empty()) out.push_back(id);
  }
  return out;
}

std::vector<DocId> ComparisonGraph::alive_vertices() const {
  std::vector<DocId> out;
  out.reserve(alive_count_);
  for (DocId id : order_) {
    auto it = nodes_.find(id);
    if (it != nodes_.end() && it->second.alive) out.push_back(id);
  }
  return out;
}

bool ComparisonGraph::is_acyclic() const {
  // Kahn's algorithm over alive vertices.
  std::unordered_map<DocId, std::size_t> remaining_out;
  std::vector<DocId> queue;
  std::size_t alive = 0;
  for (DocId id : order_) {
    auto it = nodes_.find(id);
    if (it == nodes_.end() || !it->second.alive) continue;
    ++alive;
    remaining_out[id] = it->second.out.size();
    if (it->second.out.empty()) queue.push_back(id);
  }
  std::size_t emitted = 0;
  while (!queue.empty()) {
    DocId id = queue.back();
    queue.pop_back();
    ++emitted;
    const Node& node = nodes_.at(id);
    for (DocId loser : node.in) {
      auto r = remaining_out.find(loser);
      if (r != remaining_out.end() && --r->second == 0) queue.push_back(loser);
    }
  }
  return emitted == alive;
}

// ---------------------------------------------------------------------------
// Tournament top-K
// ---------------------------------------------------------------------------

namespace {

/// One single-elimination tournament over `candidates`; records every ranked
/// list in the graph and returns the winner.
DocId run_tournament(std::vector<DocId> candidates, ComparisonGraph& graph,
                     const Corpus& corpus, const Query& query, ListwiseOracle& oracle,
                     Rng& rng, int parallelism) {
  const int L = oracle.list_size();
  while (candidates.size() > 1) {
    oracle.stats().new_round();
    rng.shuffle(candidates);
    const std::size_t bins = (candidates.size() + L - 1) / L;
    std::vector<Ranking> rankings(bins);
    parallel_for(bins, parallelism, [&](std::size_t b) {
      std::size_t lo = b * L;
      std::size_t hi = std::min(candidates.size(), lo + L);
      std::vector<DocId> bin(candidates.begin() + lo, candidates.begin() + hi);
      auto docs = docs_for(corpus, bin);
      rankings[b] = oracle.rank(query, docs);
    });
    std::vector<DocId> winners;
    winners.reserve(bins);
    for (const Ranking& r : rankings) {  // sequential: graph updates stay deterministic
      graph.record_ranking(r);
      winners.push_back(r.ids.front());
    }
    candidates = std::move(winners);
  }
  return candidates.front();
}

}  // namespace

TopKResult lt_topk(const Corpus& corpus, const Query& query, int k, ListwiseOracle& oracle,
                   std::uint64_t seed, int parallelism, EdgePolicy edges, LtTopkTrace* trace) {
  if (k < 0) throw std::invalid_argument("lt_topk: k must be >= 0");
  TopKResult out;
  out.k = k;
  out.ordered = true;
  out.clamped = static_cast<std::size_t>(k) > corpus.size();
  const int effective_k = out.clamped ? static_cast<int>(corpus.size()) : k;

  ComparisonGraph graph(edges);
  for (const auto& d : corpus.docs()) graph.add_vertex(d.id);
  Rng rng(seed);
  for (int t = 0; t < effective_k; ++t) {
    std::vector<DocId> candidates = graph.sources();
    // An inconsistent backend (a real LLM) can in principle create a cycle in
    // which nobody is undefeated; rank every remaining vertex in that case.
    if (candidates.empty()) candidates = graph.alive_vertices();
    if (trace) trace->tournament_candidates.push_back(candidates);
    DocId winner = run_tournament(std::move(candidates), graph, corpus, query, oracle, rng,
                                  parallelism);
    out.ids.push_back(winner);
    graph.remove_vertex(winner);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Tournament filter
// ---------------------------------------------------------------------------

Corpus lt_filter(const Corpus& corpus, const Query& query, const FilterConfig& config,
                 ListwiseOracle& oracle, std::uint64_t seed, int parallelism) {
  if (config.survivors < 1) throw std::invalid_argument("lt_filter: survivors must be >= 1");
  if (config.rounds < 1) throw std::invalid_argument("lt_filter: rounds must be >= 1");
  const int L = oracle.list_size();
  Rng rng(seed);

  std::vector<DocId> current;
  current.reserve(corpus.size());
  for (const auto& d : corpus.docs()) current.push_back(d.id);

  for (int round = 0; round < config.rounds; ++round) {
    oracle.stats().new_round();
    rng.shuffle(current);
    const std::size_t bins = (current.size() + L - 1) / L;
    std::vector<std::vector<DocId>> survivors(bins);
    parallel_for(bins, parallelism, [&](std::size_t b) {
      std::size_t lo = b * L;
      std::size_t hi = std::min(current.size(), lo + L);
      std::vector<DocId> bin(current.begin() + lo, current.begin() + hi);
      auto docs = docs_for(corpus, bin);
      Ranking r = oracle.rank(query, docs);
      std::size_t keep = std::min<std::size_t>(config.survivors, r.ids.size());
      survivors[b].assign(r.ids.begin(), r.ids.begin() + keep);
    });
    current.clear();
    for (auto& s : survivors) current.insert(current.end(), s.begin(), s.end());
  }

  // Canonical output: survivors in original corpus order.
  std::unordered_set<DocId> keep(current.begin(), current.end());
  std::vector<Document> docs;
  docs.reserve(keep.size());
  for (const auto& d : corpus.docs())
    if (keep.count(d.id)) docs.push_back(d);
  return Corpus(std::move(docs));
}

// ---------------------------------------------------------------------------
// Pivot selection
// ---------------------------------------------------------------------------

std::vector<const Document*> select_pivots(const std::vector<const Document*>& candidates,
                                           int p, PivotStrategy strategy,
                                           std::optional<int> k_target,
                                           const ProxyScores* proxy, Rng& rng) {
  const std::size_t n = candidates.size();
  if (p < 1) throw std::invalid_argument("select_pivots: p must be >= 1");
  if (static_cast<std::size_t>(p) >= n)
    throw std::invalid_argument("select_pivots: p must be < |candidates|");

  if (strategy == PivotStrategy::random) {
    auto idx = rng.sample_indices(n, static_cast<std::size_t>(p));
    std::vector<const Document*> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(candidates[i]);
    return out;
  }

  if (!proxy) throw std::invalid_argument("select_pivots: proxy strategy needs proxy scores");
  std::vector<const Document*> by_proxy(candidates);
  for (const Document* d : by_proxy)
    if (!proxy->count(d->id))
      throw std::invalid_argument("select_pivots: no proxy score for document " +
                                  std::to_string(d->id));
  std::stable_sort(by_proxy.begin(), by_proxy.end(), [&](const Document* a, const Document* b) {
    double pa = proxy->at(a->id), pb = proxy->at(b->id);
    if (pa != pb) return pa > pb;
    return a->id < b->id;
  });

  std::vector<const Document*> out;
  out.reserve(static_cast<std::size_t>(p));
  if (k_target.has_value()) {
    // Selection: pivots hug the decision boundary at proxy ranks K..K+P-1.
    long long start = std::clamp<long long>(*k_target, 1,
                                            static_cast<long long>(n) - p + 1);
    for (int i = 0; i < p; ++i) out.push_back(by_proxy[static_cast<std::size_t>(start - 1 + i)]);
  } else {
    // Sorting: evenly spaced quantile ranks (1-based) floor(i(n+1)/(p+1)).
    for (int i = 1; i <= p; ++i) {
      std::size_t rank1 = static_cast<std::size_t>(
          (static_cast<unsigned long long>(i) * (n + 1)) / (p + 1));
      rank1 = std::clamp<std::size_t>(rank1, 1, n);
      out.push_back(by_proxy[rank1 - 1]);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Bucket partition round
// ---------------------------------------------------------------------------

BucketRoundOutcome bucket_sort_round(const std::vector<const Document*>& candidates,
                                     const std::vector<const Document*>& pivots_ascending,
                                     int p_prime, long long k_remaining, bool early_stopping,
                                     const Query& query, ListwiseOracle& oracle,
                                     int parallelism) {
  const int p = static_cast<int>(pivots_ascending.size());
  if (p < 1) throw std::invalid_argument("bucket_sort_round: needs at least one pivot");
  if (p_prime < 1 || p_prime > p)
    throw std::invalid_argument("bucket_sort_round: p_prime must be in [1, |pivots|]");
  const int L = oracle.list_size();
  const int chunk_capacity = L - p_prime;
  if (chunk_capacity < 1)
    throw std::invalid_argument("bucket_sort_round: p_prime leaves no room for candidates");

  BucketRoundOutcome outcome;
  outcome.buckets.assign(static_cast<std::size_t>(p) + 1, {});
  outcome.floor_index = p;

  std::vector<const Document*> unresolved = candidates;
  long long resolved_total = 0;

  // Pivot groups from the most relevant down: [lo, hi) slices of the
  // ascending pivot array.
  for (int hi = p; hi > 0; hi -= p_prime) {
    const int lo = std::max(0, hi - p_prime);
    if (!unresolved.empty()) {
      std::vector<const Document*> group(pivots_ascending.begin() + lo,
                                         pivots_ascending.begin() + hi);
      oracle.stats().new_round();
      const std::size_t chunks =
          (unresolved.size() + chunk_capacity - 1) / static_cast<std::size_t>(chunk_capacity);
      std::vector<std::unordered_map<DocId, int>> assignments(chunks);
      parallel_for(chunks, parallelism, [&](std::size_t c) {
        std::size_t clo = c * static_cast<std::size_t>(chunk_capacity);
        std::size_t chi = std::min(unresolved.size(), clo + chunk_capacity);
        std::vector<const Document*> chunk(unresolved.begin() + clo, unresolved.begin() + chi);
        assignments[c] = oracle.bucket_assign(query, group, chunk);
      });
      std::vector<const Document*> still_unresolved;
      for (std::size_t c = 0; c < chunks; ++c) {
        std::size_t clo = c * static_cast<std::size_t>(chunk_capacity);
        std::size_t chi = std::min(unresolved.size(), clo + chunk_capacity);
        for (std::size_t i = clo; i < chi; ++i) {
          const Document* doc = unresolved[i];
          int local = assignments[c].at(doc->id);  // 0..group size
          if (local == 0) {
            still_unresolved.push_back(doc);  // below this group's floor
          } else {
            outcome.buckets[static_cast<std::size_t>(lo + local)].push_back(doc);
            ++resolved_total;
          }
        }
      }
      unresolved = std::move(still_unresolved);
    }
    outcome.floor_index = lo;
    if (early_stopping && k_remaining > 0 &&
        resolved_total + (p - lo) >= k_remaining && lo > 0) {
      outcome.early_stopped = true;
      break;
    }
  }

  // Whatever never resolved sits below the last processed group; merged at
  // the floor bucket (exact when the floor reached 0).
  auto& floor_bucket = outcome.buckets[static_cast<std::size_t>(outcome.floor_index)];
  floor_bucket.insert(floor_bucket.end(), unresolved.begin(), unresolved.end());
  return outcome;
}

// ---------------------------------------------------------------------------
// Multi-pivot quickselect
// ---------------------------------------------------------------------------

namespace {

/// Ranks the drawn pivots into ascending relevance order (one call for >= 2).
std::vector<const Document*> pivots_ascending_order(const std::vector<const Document*>& drawn,
                                                    const Corpus& corpus, const Query& query,
                                                    ListwiseOracle& oracle) {
  oracle.stats().new_round();
  Ranking r = oracle.rank(query, drawn);
  std::vector<const Document*> asc = docs_for(corpus, r.ids);
  std::reverse(asc.begin(), asc.end());
  return asc;
}

std::vector<const Document*> remove_pivots(const std::vector<const Document*>& candidates,
                                           const std::vector<const Document*>& pivots) {
  std::unordered_set<DocId> pivot_ids;
  for (const Document* d : pivots) pivot_ids.insert(d->id);
  std::vector<const Document*> out;
  out.reserve(candidates.size() - pivots.size());
  for (const Document* d : candidates)
    if (!pivot_ids.count(d->id)) out.push_back(d);
  return out;
}

}  // namespace

TopKResult lmpq_select(const Corpus& corpus, const Query& query, int k,
                       const PivotConfig& config, ListwiseOracle& oracle,
                       const ProxyScores* proxy, int parallelism) {
  if (k < 0) throw std::invalid_argument("lmpq_select: k must be >= 0");
  validate_pivot_config(config, oracle.list_size());
  if (config.strategy == PivotStrategy::proxy && !proxy)
    throw std::invalid_argument("lmpq_select: proxy strategy needs proxy scores");

  TopKResult out;
  out.k = k;
  out.ordered = false;
  out.clamped = static_cast<std::size_t>(k) > corpus.size();

  const int L = oracle.list_size();
  Rng rng(config.seed);
  std::vector<const Document*> candidates = doc_ptrs(corpus);
  long long k_rem = out.clamped ? static_cast<long long>(corpus.size()) : k;

  while (k_rem > 0) {
    if (static_cast<long long>(candidates.size()) <= k_rem) {
      for (const Document* d : candidates) out.ids.push_back(d->id);
      break;
    }
    if (candidates.size() <= static_cast<std::size_t>(L)) {
      oracle.stats().new_round();
      Ranking r = oracle.rank(query, candidates);
      out.ids.insert(out.ids.end(), r.ids.begin(), r.ids.begin() + k_rem);
      break;
    }

    auto drawn = select_pivots(candidates, config.p, config.strategy,
                               std::optional<int>(static_cast<int>(k_rem)), proxy, rng);
    auto pivots = pivots_ascending_order(drawn, corpus, query, oracle);
    auto rest = remove_pivots(candidates, pivots);
    auto round = bucket_sort_round(rest, pivots, config.resolved_p_prime(), k_rem,
                                   config.early_stopping, query, oracle, parallelism);

    // Walk segments best-to-worst: bucket p, pivot p-1, bucket p-1, ...,
    // pivot 0, bucket 0. Everything wholly above the K boundary joins the
    // solution; the straddling bucket becomes the next candidate set.
    const int p = static_cast<int>(pivots.size());
    std::vector<const Document*>* straddle = nullptr;
    for (int b = p; b >= 0 && k_rem > 0; --b) {
      auto& bucket = round.buckets[static_cast<std::size_t>(b)];
      if (static_cast<long long>(bucket.size()) < k_rem) {
        for (const Document* d : bucket) out.ids.push_back(d->id);
        k_rem -= static_cast<long long>(bucket.size());
      } else if (static_cast<long long>(bucket.size()) == k_rem) {
        if (round.early_stopped && b <= round.floor_index)
          throw std::logic_error("lmpq_select: early stop consumed a coarse bucket");
        for (const Document* d : bucket) out.ids.push_back(d->id);
        k_rem = 0;
        break;
      } else {
        if (round.early_stopped && b <= round.floor_index)
          throw std::logic_error("lmpq_select: early stop recursed into a coarse bucket");
        straddle = &bucket;
        break;
      }
      if (b > 0) {  // pivot below this bucket is the next-best document
        out.ids.push_back(pivots[static_cast<std::size_t>(b - 1)]->id);
        --k_rem;
      }
    }
    if (k_rem == 0) break;
    assert(straddle != nullptr);
    candidates = std::move(*straddle);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Multi-pivot quicksort
// ---------------------------------------------------------------------------

namespace {

struct SortContext {
  const Query& query;
  const PivotConfig& config;
  ListwiseOracle& oracle;
  const ProxyScores* proxy;
  int parallelism;
  Rng rng;
  const std::unordered_map<DocId, const Document*>& index;
  std::vector<DocId> out;

  void run(std::vector<const Document*> items) {
    if (items.empty()) return;
    if (items.size() == 1) {
      out.push_back(items[0]->id);
      return;
    }
    if (items.size() <= static_cast<std::size_t>(oracle.list_size())) {
      oracle.stats().new_round();
      Ranking r = oracle.rank(query, items);
      out.insert(out.end(), r.ids.begin(), r.ids.end());
      return;
    }
    auto drawn = select_pivots(items, config.p, config.strategy, std::nullopt, proxy, rng);
    oracle.stats().new_round();
    Ranking pivot_order = oracle.rank(query, drawn);  // singleton short-circuits for p=1
    std::vector<const Document*> pivots;
    pivots.reserve(pivot_order.ids.size());
    for (auto it = pivot_order.ids.rbegin(); it != pivot_order.ids.rend(); ++it)
      pivots.push_back(index.at(*it));
    auto rest = remove_pivots(items, pivots);
    auto round = bucket_sort_round(rest, pivots, config.resolved_p_prime(), 0, false, query,
                                   oracle, parallelism);
    for (int b = static_cast<int>(pivots.size()); b >= 0; --b) {
      run(std::move(round.buckets[static_cast<std::size_t>(b)]));
      if (b > 0) out.push_back(pivots[static_cast<std::size_t>(b - 1)]->id);
    }
  }
};

}  // namespace

Ranking lmpq_sort_items(const std::vector<const Document*>& items, const Query& query,
                        const PivotConfig& config, ListwiseOracle& oracle,
                        const ProxyScores* proxy, int parallelism) {
  validate_pivot_config(config, oracle.list_size());
  if (config.strategy == PivotStrategy::proxy && !proxy)
    throw std::invalid_argument("lmpq_sort: proxy strategy needs proxy scores");
  std::unordered_map<DocId, const Document*> index;
  index.reserve(items.size());
  for (const Document* d : items)
    if (!index.emplace(d->id, d).second)
      throw std::invalid_argument("lmpq_sort: duplicate document id");
  SortContext ctx{query, config, oracle, proxy, parallelism, Rng(config.seed), index, {}};
  ctx.out.reserve(items.size());
  ctx.run(items);
  return Ranking{std::move(ctx.out)};
}

Ranking lmpq_sort(const Corpus& corpus, const Query& query, const PivotConfig& config,
                  ListwiseOracle& oracle, const ProxyScores* proxy, int parallelism) {
  return lmpq_sort_items(doc_ptrs(corpus), query, config, oracle, proxy, parallelism);
}

// ---------------------------------------------------------------------------
// Refinement and pairwise baseline
// ---------------------------------------------------------------------------

Ranking top_few_refine(const Ranking& ranking, const Corpus& corpus, const Query& query,
                       ListwiseOracle& oracle, int few, std::uint64_t seed, int parallelism) {
  if (few < 0) throw std::invalid_argument("top_few_refine: few must be >= 0");
  std::size_t prefix = std::min<std::size_t>(static_cast<std::size_t>(few), ranking.ids.size());
  if (prefix <= 1) return ranking;
  ListwiseOracle pairwise = oracle.with_list_size(2);
  PivotConfig cfg;
  cfg.p = 1;
  cfg.p_prime = 1;
  cfg.seed = seed;
  std::vector<const Document*> head;
  head.reserve(prefix);
  for (std::size_t i = 0; i < prefix; ++i) head.push_back(&corpus.by_id(ranking.ids[i]));
  Ranking sorted_head = lmpq_sort_items(head, query, cfg, pairwise, nullptr, parallelism);
  Ranking out;
  out.ids = sorted_head.ids;
  out.ids.insert(out.ids.end(), ranking.ids.begin() + prefix, ranking.ids.end());
  return out;
}

TopKResult pairwise_baseline(const Corpus& corpus, const Query& query, int k,
                             ListwiseOracle& oracle, std::uint64_t seed, int parallelism) {
  ListwiseOracle pairwise = oracle.with_list_size(2);
  PivotConfig cfg;
  cfg.p = 1;
  cfg.p_prime = 1;
  cfg.seed = seed;
  TopKResult selected = lmpq_select(corpus, query, k, cfg, pairwise, nullptr, parallelism);
  PivotConfig sort_cfg = cfg;
  sort_cfg.seed = mix64(seed ^ 0xA3C59AC2F1D9B2E7ULL);
  std::vector<const Document*> docs = docs_for(corpus, selected.ids);
  Ranking ordered = lmpq_sort_items(docs, query, sort_cfg, pairwise, nullptr, parallelism);
  TopKResult out;
  out.ids = ordered.ids;
  out.ordered = true;
  out.k = k;
  out.clamped = selected.clamped;
  return out;
}

}  // namespace listk
