#include "listk/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <regex>
#include <stdexcept>
#include <unordered_set>

#include "listk/remote_oracle.hpp"
#include "listk/rng.hpp"

namespace listk {

std::vector<const Document*> doc_ptrs(const Corpus& corpus) {
  std::vector<const Document*> out;
  out.reserve(corpus.size());
  for (const auto& d : corpus.docs()) out.push_back(&d);
  return out;
}

ListwiseOracle::ListwiseOracle(std::shared_ptr<RankBackend> backend, int list_size)
    : backend_(std::move(backend)),
      stats_(std::make_shared<OracleStats>()),
      list_size_(list_size) {
  if (!backend_) throw std::invalid_argument("ListwiseOracle: null backend");
  if (list_size_ < 2) throw std::invalid_argument("ListwiseOracle: list_size must be >= 2");
}

ListwiseOracle ListwiseOracle::with_list_size(int cap) const {
  if (cap < 2) throw std::invalid_argument("with_list_size: cap must be >= 2");
  ListwiseOracle view(*this);
  view.list_size_ = std::min(list_size_, cap);
  return view;
}

namespace {

void check_rank_input(DocSpan docs, int list_size) {
  if (docs.empty()) throw std::invalid_argument("rank: empty document list");
  if (docs.size() > static_cast<std::size_t>(list_size))
    throw std::invalid_argument("rank: list of " + std::to_string(docs.size()) +
                                " exceeds list_size " + std::to_string(list_size));
  std::unordered_set<DocId> ids;
  for (const Document* d : docs)
    if (!ids.insert(d->id).second)
      throw std::invalid_argument("rank: duplicate document id " + std::to_string(d->id));
}

void check_permutation(const Ranking& ranking, DocSpan docs) {
  if (ranking.ids.size() != docs.size())
    throw std::runtime_error("oracle backend returned a ranking of the wrong size");
  std::unordered_set<DocId> want;
  for (const Document* d : docs) want.insert(d->id);
  std::unordered_set<DocId> got;
  for (DocId id : ranking.ids) {
    if (!want.count(id) || !got.insert(id).second)
      throw std::runtime_error("oracle backend returned a non-permutation");
  }
}

}  // namespace

Ranking ListwiseOracle::rank(const Query& query, DocSpan docs) {
  check_rank_input(docs, list_size_);
  if (docs.size() == 1) return Ranking{{docs[0]->id}};
  stats_->record_call(static_cast<int>(docs.size()));
  Ranking out = backend_->rank(query, docs, {});
  check_permutation(out, docs);
  return out;
}

std::unordered_map<DocId, int> ListwiseOracle::bucket_assign(const Query& query,
                                                             DocSpan pivots_ascending,
                                                             DocSpan candidates) {
  const std::size_t p = pivots_ascending.size();
  if (p == 0) throw std::invalid_argument("bucket_assign: needs at least one pivot");
  if (candidates.empty()) return {};
  if (p + candidates.size() > static_cast<std::size_t>(list_size_))
    throw std::invalid_argument("bucket_assign: pivots + candidates exceed list_size");

  std::vector<const Document*> docs;
  docs.reserve(p + candidates.size());
  for (const Document* d : pivots_ascending) docs.push_back(d);
  for (const Document* d : candidates) docs.push_back(d);
  check_rank_input(docs, list_size_);

  // Hint: pivots occupy positions 1..p (ascending relevance), so the known
  // best-to-worst order is p, p-1, ..., 1.
  std::vector<int> known_desc(p);
  for (std::size_t i = 0; i < p; ++i) known_desc[i] = static_cast<int>(p - i);

  stats_->record_call(static_cast<int>(docs.size()));
  Ranking ranking = backend_->rank(query, docs, known_desc);
  check_permutation(ranking, docs);

  std::unordered_map<DocId, std::size_t> position;
  position.reserve(ranking.ids.size());
  for (std::size_t i = 0; i < ranking.ids.size(); ++i) position[ranking.ids[i]] = i;

  // Contradiction resolution: the backend may have permuted the pivots, so
  // keep the returned pivot *slots* and relabel them with the canonical pivot
  // order (earliest slot = most relevant pivot). A candidate's bucket is then
  // |pivots| minus the number of pivot slots ranked above it.
  std::vector<std::size_t> pivot_slots;
  pivot_slots.reserve(p);
  for (const Document* d : pivots_ascending) pivot_slots.push_back(position.at(d->id));
  std::sort(pivot_slots.begin(), pivot_slots.end());

  std::unordered_map<DocId, int> bucket;
  bucket.reserve(candidates.size());
  for (const Document* c : candidates) {
    std::size_t q = position.at(c->id);
    auto above = std::lower_bound(pivot_slots.begin(), pivot_slots.end(), q) - pivot_slots.begin();
    bucket[c->id] = static_cast<int>(p) - static_cast<int>(above);
  }
  return bucket;
}

Ranking PerfectBackend::rank(const Query&, DocSpan docs, std::span<const int>) {
  std::vector<const Document*> sorted(docs.begin(), docs.end());
  for (const Document* d : sorted)
    if (!d->true_score)
      throw std::invalid_argument("perfect oracle: document " + std::to_string(d->id) +
                                  " has no true_score");
  std::stable_sort(sorted.begin(), sorted.end(), [](const Document* a, const Document* b) {
    if (*a->true_score != *b->true_score) return *a->true_score > *b->true_score;
    return a->id < b->id;
  });
  Ranking out;
  out.ids.reserve(sorted.size());
  for (const Document* d : sorted) out.ids.push_back(d->id);
  return out;
}

NoisyBackend::NoisyBackend(const Corpus& corpus, NoisyOracleParams params) {
  if (params.rho < 0.0 || params.rho > 1.0)
    throw std::invalid_argument("noisy oracle: rho must be in [0, 1]");
  if (!corpus.scored()) throw std::invalid_argument("noisy oracle: corpus has no true_score");

  // Rank-normalize true scores to zero mean / unit variance so rho is the
  // correlation between s' and the score order. Ranks ascend by (score, -id)
  // so that rho=1 sorts exactly like the perfect backend (ties -> id asc
  // when read best-first).
  const std::size_t n = corpus.size();
  std::vector<const Document*> sorted = doc_ptrs(corpus);
  std::stable_sort(sorted.begin(), sorted.end(), [](const Document* a, const Document* b) {
    if (*a->true_score != *b->true_score) return *a->true_score < *b->true_score;
    return a->id > b->id;
  });
  const double mean = (static_cast<double>(n) + 1.0) / 2.0;
  const double sd = n > 1 ? std::sqrt((static_cast<double>(n) * n - 1.0) / 12.0) : 1.0;
  const double noise_weight = std::sqrt(std::max(0.0, 1.0 - params.rho * params.rho));
  score_.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const DocId id = sorted[i]->id;
    const double z = (static_cast<double>(i + 1) - mean) / sd;
    Rng noise(mix64(params.seed) ^ mix64(static_cast<std::uint64_t>(id) + 0x51ED270B9F9B4D2AULL));
    score_[id] = params.rho * z + noise_weight * noise.next_gaussian();
  }
}

double NoisyBackend::corrupted_score(DocId id) const {
  auto it = score_.find(id);
  if (it == score_.end())
    throw std::invalid_argument("noisy oracle: document " + std::to_string(id) +
                                " not in the corpus it was built from");
  return it->second;
}

Ranking NoisyBackend::rank(const Query&, DocSpan docs, std::span<const int>) {
  std::vector<const Document*> sorted(docs.begin(), docs.end());
  std::stable_sort(sorted.begin(), sorted.end(), [this](const Document* a, const Document* b) {
    double sa = corrupted_score(a->id), sb = corrupted_score(b->id);
    if (sa != sb) return sa > sb;
    return a->id < b->id;
  });
  Ranking out;
  out.ids.reserve(sorted.size());
  for (const Document* d : sorted) out.ids.push_back(d->id);
  return out;
}

std::vector<ChatMessage> build_rank_prompt(const Query& query, DocSpan docs,
                                           std::span<const int> known_order_desc) {
  const std::size_t num = docs.size();
  std::vector<ChatMessage> messages;
  messages.push_back({"system",
                      "You are RankLLM, an intelligent assistant that can rank passages based "
                      "on their relevancy to the query"});
  std::string user;
  user += "I will provide you with " + std::to_string(num) +
          " passages, each indicated by a numerical identifier []. Rank the passages based "
          "on their relevance to the search query: " + query.text + ".\n";
  for (std::size_t i = 0; i < num; ++i)
    user += "[" + std::to_string(i + 1) + "] " + docs[i]->text + "\n";
  user += "Search Query: " + query.text + ".\n";
  user += "Rank the " + std::to_string(num) +
          " passages above based on their relevance to the search query. All the passages "
          "should be included and listed using identifiers, in descending order of relevance. "
          "The output format should be [] > [], e.g., [2] > [1], Answer concisely and directly "
          "and only respond with the ranking results, do not say any word or explain.";
  if (!known_order_desc.empty()) {
    user += "\nNote that the relative order ";
    for (std::size_t i = 0; i < known_order_desc.size(); ++i) {
      if (i > 0) user += " > ";
      user += "[" + std::to_string(known_order_desc[i]) + "]";
    }
    user += " among those passages is already known and your ranking must be consistent with it.";
  }
  messages.push_back({"user", std::move(user)});
  return messages;
}

namespace {
const std::regex kStrictReply(R"(^\[\d+\]( > \[\d+\])*$)");
const std::regex kIndexExtract(R"(\[(\d+)\])");

std::string trimmed(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}
}  // namespace

bool llm_reply_well_formed(const std::string& reply) {
  return std::regex_match(trimmed(reply), kStrictReply);
}

std::optional<Ranking> parse_llm_ranking(const std::string& reply,
                                         std::span<const DocId> input_ids) {
  const std::size_t n = input_ids.size();
  std::vector<bool> used(n, false);
  Ranking out;
  out.ids.reserve(n);
  const std::string text = trimmed(reply);
  for (auto it = std::sregex_iterator(text.begin(), text.end(), kIndexExtract);
       it != std::sregex_iterator(); ++it) {
    long idx = 0;
    try {
      idx = std::stol((*it)[1].str());
    } catch (const std::out_of_range&) {
      continue;
    }
    if (idx < 1 || static_cast<std::size_t>(idx) > n) continue;  // out of range: drop
    if (used[idx - 1]) continue;                                 // duplicate: keep first
    used[idx - 1] = true;
    out.ids.push_back(input_ids[idx - 1]);
  }
  if (out.ids.empty()) return std::nullopt;
  for (std::size_t i = 0; i < n; ++i)
    if (!used[i]) out.ids.push_back(input_ids[i]);  // missing: input order
  return out;
}

ListwiseOracle make_oracle(const OracleConfig& config, const Corpus* corpus) {
  switch (config.backend) {
    case OracleBackendKind::perfect:
      return ListwiseOracle(std::make_shared<PerfectBackend>(), config.list_size);
    case OracleBackendKind::noisy:
      if (!corpus) throw std::invalid_argument("make_oracle: noisy backend needs a corpus");
      return ListwiseOracle(std::make_shared<NoisyBackend>(*corpus, config.noisy),
                            config.list_size);
    case OracleBackendKind::remote:
      return make_remote_oracle(config.remote, config.list_size);
  }
  throw std::invalid_argument("make_oracle: unknown backend");
}

}  // namespace listk
