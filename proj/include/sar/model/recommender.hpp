#pragma once

#include "sar/model/encoder.hpp"

#include <span>
#include <vector>

namespace sar::model {

// Probabilities over the whole catalog and the induced ranking.
struct RankedList {
  std::vector<double> scores;  // softmax-normalized
  std::vector<ItemId> order;   // descending score, ties by ascending item id

  static RankedList from_scores(std::vector<double> scores);
  // 1-based position of `item` in `order`. Throws ContractError for unknown items.
  std::size_t rank_of(ItemId item) const;
  std::size_t size() const { return scores.size(); }
};

// 1-based rank of `item` under the RankedList ordering, without sorting.
std::size_t rank_in_scores(std::span<const double> scores, ItemId item);

struct RecommenderShape {
  std::size_t item_dim = 100;
  std::size_t user_dim = 100;
  std::size_t ff_width = 200;
  std::size_t blocks = 1;
  std::size_t max_length = 200;
  double gate_bias = 0.0;
};

// Personalized transformer over the adapted sequence. Position j of the
// window is item_emb[i_j] + recency_emb[l−1−j] concatenated with the user
// embedding; the causal stack's last-position output h scores item k as
// h · (item_emb[k] ⊕ user_emb[u]).
class Recommender {
 public:
  Recommender() = default;
  Recommender(const RecommenderShape& shape, nc::Rng& rng);

  Tensor input_rows(const EmbeddingTable& emb, std::span<const ItemId> window, UserId user) const;
  // 1×|I| pre-softmax scores.
  Tensor logits(const EmbeddingTable& emb, std::span<const ItemId> window, UserId user) const;
  Tensor probabilities(const EmbeddingTable& emb, std::span<const ItemId> window,
                       UserId user) const;
  RankedList score_next(const EmbeddingTable& emb, std::span<const ItemId> window,
                        UserId user) const;

  void append_parameters(std::vector<NamedTensor>& out) const;
  static std::size_t parameter_count(const RecommenderShape& shape);

  const RecommenderShape& shape() const { return shape_; }
  const GatedAttentionStack& stack() const { return stack_; }
  GatedAttentionStack& stack() { return stack_; }
  const Tensor& recency() const { return recency_; }

 private:
  RecommenderShape shape_;
  Tensor recency_;  // max_length × item_dim
  GatedAttentionStack stack_;
};

// −log(r_truth + 1e-12) on a 1×|I| probability row.
Tensor cross_entropy(const Tensor& probabilities, ItemId truth);
double cross_entropy(const RankedList& ranked, ItemId truth);

// First K entries of the ranking. Throws ContractError unless 1 <= K <= |I|.
std::vector<ItemId> recommend_topk(const RankedList& ranked, std::size_t k);

inline constexpr double kLogEpsilon = 1e-12;

}  // namespace sar::model
