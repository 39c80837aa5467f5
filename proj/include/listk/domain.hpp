#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace listk {

using DocId = std::int64_t;

/// One retrievable item. `true_score` is the hidden relevance used by the
/// perfect/noisy oracles and by evaluation; real corpora may omit it.
/// `text` may be empty in simulation.
struct Document {
  DocId id = 0;
  std::string text;
  std::optional<double> true_score;
};

struct Query {
  std::string id;
  std::string text;
};

/// Document collection with unique ids. Scores are all-present or
/// all-absent; algorithms that need ground truth check `scored()`.
class Corpus {
 public:
  Corpus() = default;
  explicit Corpus(std::vector<Document> docs);

  std::size_t size() const { return docs_.size(); }
  const std::vector<Document>& docs() const { return docs_; }
  const Document& at(std::size_t index) const { return docs_[index]; }
  const Document& by_id(DocId id) const;
  bool contains(DocId id) const { return index_.count(id) > 0; }
  bool scored() const { return scored_; }
  double score_of(DocId id) const;

 private:
  std::vector<Document> docs_;
  std::unordered_map<DocId, std::size_t> index_;
  bool scored_ = false;
};

/// Total order over a set of documents, best first.
struct Ranking {
  std::vector<DocId> ids;
};

/// Result of a top-K computation. `ordered` says whether `ids` carries rank
/// information or is just a set; `clamped` flags a K > N request that was
/// reduced to N.
struct TopKResult {
  std::vector<DocId> ids;
  bool ordered = false;
  int k = 0;
  bool clamped = false;
};

/// Exact top-K by true score (ties broken by ascending id). Ground truth for
/// every randomized algorithm in this project. Requires a scored corpus.
TopKResult brute_force_topk(const Corpus& corpus, int k, bool ordered = true);

/// |result ∩ truth| / K over the two id sets. `truth.ids` must have size K>0.
double recall_at_k(const TopKResult& result, const TopKResult& truth);

/// NDCG@K with gain(d) = gains.at(d) (absent ids gain 0) and the usual
/// log2(rank+1) discount. Errors if every gain is zero (ideal DCG undefined).
double ndcg_at_k(const Ranking& result,
                 const std::unordered_map<DocId, double>& gains, int k);

/// Spearman rank correlation between two total orders over the same id set
/// (no ties): 1 - 6*sum(d^2) / (n(n^2-1)). Requires n >= 2.
double spearman(const Ranking& a, const Ranking& b);

}  // namespace listk
