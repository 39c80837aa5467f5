#include "listk/domain.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace listk {

Corpus::Corpus(std::vector<Document> docs) : docs_(std::move(docs)) {
  if (docs_.empty()) throw std::invalid_argument("Corpus: needs at least one document");
  index_.reserve(docs_.size());
  std::size_t with_score = 0;
  for (std::size_t i = 0; i < docs_.size(); ++i) {
    if (!index_.emplace(docs_[i].id, i).second)
      throw std::invalid_argument("Corpus: duplicate document id " + std::to_string(docs_[i].id));
    if (docs_[i].true_score.has_value()) ++with_score;
  }
  if (with_score != 0 && with_score != docs_.size())
    throw std::invalid_argument("Corpus: true_score must be present for all documents or none");
  scored_ = with_score == docs_.size();
}

const Document& Corpus::by_id(DocId id) const {
  auto it = index_.find(id);
  if (it == index_.end())
    throw std::invalid_argument("Corpus: unknown document id " + std::to_string(id));
  return docs_[it->second];
}

double Corpus::score_of(DocId id) const {
  const Document& d = by_id(id);
  if (!d.true_score) throw std::invalid_argument("Corpus: document has no true_score");
  return *d.true_score;
}

TopKResult brute_force_topk(const Corpus& corpus, int k, bool ordered) {
  if (k < 0) throw std::invalid_argument("brute_force_topk: k must be >= 0");
  if (!corpus.scored()) throw std::invalid_argument("brute_force_topk: corpus has no true_score");
  std::vector<DocId> ids;
  ids.reserve(corpus.size());
  for (const auto& d : corpus.docs()) ids.push_back(d.id);
  std::sort(ids.begin(), ids.end(), [&](DocId a, DocId b) {
    double sa = corpus.score_of(a), sb = corpus.score_of(b);
    if (sa != sb) return sa > sb;
    return a < b;
  });
  TopKResult out;
  out.k = k;
  out.ordered = ordered;
  out.clamped = static_cast<std::size_t>(k) > corpus.size();
  ids.resize(std::min<std::size_t>(static_cast<std::size_t>(k), ids.size()));
  out.ids = std::move(ids);
  return out;
}

double recall_at_k(const TopKResult& result, const TopKResult& truth) {
  if (truth.ids.empty()) throw std::invalid_argument("recall_at_k: truth set is empty");
  std::unordered_map<DocId, bool> in_truth;
  for (DocId id : truth.ids) in_truth[id] = true;
  if (in_truth.size() != truth.ids.size())
    throw std::invalid_argument("recall_at_k: duplicate ids in truth set");
  std::size_t hits = 0;
  std::unordered_map<DocId, bool> seen;
  for (DocId id : result.ids) {
    if (!seen.emplace(id, true).second) continue;
    if (in_truth.count(id)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(truth.ids.size());
}

double ndcg_at_k(const Ranking& result,
                 const std::unordered_map<DocId, double>& gains, int k) {
  if (k <= 0) throw std::invalid_argument("ndcg_at_k: k must be > 0");
  std::vector<double> all_gains;
  all_gains.reserve(gains.size());
  bool any_positive = false;
  for (const auto& [id, g] : gains) {
    if (g < 0) throw std::invalid_argument("ndcg_at_k: negative gain");
    if (g > 0) any_positive = true;
    all_gains.push_back(g);
  }
  if (!any_positive) throw std::invalid_argument("ndcg_at_k: all gains are zero");

  auto discount = [](std::size_t rank1) {  // rank1 is 1-based
    return 1.0 / std::log2(static_cast<double>(rank1) + 1.0);
  };
  double dcg = 0.0;
  std::size_t limit = std::min<std::size_t>(static_cast<std::size_t>(k), result.ids.size());
  for (std::size_t i = 0; i < limit; ++i) {
    auto it = gains.find(result.ids[i]);
    if (it != gains.end()) dcg += it->second * discount(i + 1);
  }
  std::sort(all_gains.begin(), all_gains.end(), std::greater<double>());
  double idcg = 0.0;
  std::size_t ideal_limit = std::min<std::size_t>(static_cast<std::size_t>(k), all_gains.size());
  for (std::size_t i = 0; i < ideal_limit; ++i) idcg += all_gains[i] * discount(i + 1);
  return dcg / idcg;
}

double spearman(const Ranking& a, const Ranking& b) {
  const std::size_t n = a.ids.size();
  if (n < 2) throw std::invalid_argument("spearman: need at least 2 items");
  if (b.ids.size() != n) throw std::invalid_argument("spearman: rankings differ in length");
  std::unordered_map<DocId, std::size_t> rank_b;
  rank_b.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    if (!rank_b.emplace(b.ids[i], i).second)
      throw std::invalid_argument("spearman: duplicate id in ranking");
  double sum_d2 = 0.0;
  std::unordered_map<DocId, bool> seen;
  for (std::size_t i = 0; i < n; ++i) {
    DocId id = a.ids[i];
    if (!seen.emplace(id, true).second)
      throw std::invalid_argument("spearman: duplicate id in ranking");
    auto it = rank_b.find(id);
    if (it == rank_b.end()) throw std::invalid_argument("spearman: rankings cover different ids");
    double d = static_cast<double>(i) - static_cast<double>(it->second);
    sum_d2 += d * d;
  }
  double nn = static_cast<double>(n);
  return 1.0 - 6.0 * sum_d2 / (nn * (nn * nn - 1.0));
}

}  // namespace listk
