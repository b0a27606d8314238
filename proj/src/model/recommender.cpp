#include "sar/model/recommender.hpp"

#include "sar/errors.hpp"
#include "sar/numcore/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sar::model {

RankedList RankedList::from_scores(std::vector<double> scores) {
  RankedList ranked;
  ranked.order.resize(scores.size());
  std::iota(ranked.order.begin(), ranked.order.end(), ItemId{0});
  std::sort(ranked.order.begin(), ranked.order.end(), [&](ItemId a, ItemId b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  ranked.scores = std::move(scores);
  return ranked;
}

std::size_t RankedList::rank_of(ItemId item) const {
  if (item >= scores.size()) {
    throw ContractError("item " + std::to_string(item) + " is not in the catalog");
  }
  const auto it = std::find(order.begin(), order.end(), item);
  return static_cast<std::size_t>(it - order.begin()) + 1;
}

std::size_t rank_in_scores(std::span<const double> scores, ItemId item) {
  if (item >= scores.size()) {
    throw ContractError("item " + std::to_string(item) + " is not in the catalog");
  }
  const double target = scores[item];
  std::size_t ahead = 0;
  for (ItemId k = 0; k < scores.size(); ++k) {
    if (scores[k] > target || (scores[k] == target && k < item)) ++ahead;
  }
  return ahead + 1;
}

Recommender::Recommender(const RecommenderShape& shape, nc::Rng& rng) : shape_(shape) {
  recency_ = embedding_init(shape.max_length, shape.item_dim, rng);
  stack_ = GatedAttentionStack({shape.item_dim + shape.user_dim, shape.ff_width}, shape.blocks,
                               shape.gate_bias, rng);
}

Tensor Recommender::input_rows(const EmbeddingTable& emb, std::span<const ItemId> window,
                               UserId user) const {
  const std::size_t l = window.size();
  if (l == 0) throw ContractError("score_next: empty adapted sequence");
  if (l > shape_.max_length) {
    throw CapacityError("adapted sequence of length " + std::to_string(l) + " exceeds max_length " +
                        std::to_string(shape_.max_length));
  }
  if (user >= emb.user.rows()) throw ContractError("score_next: unknown user");
  const std::vector<std::size_t> items(window.begin(), window.end());
  std::vector<std::size_t> recency(l);
  for (std::size_t j = 0; j < l; ++j) recency[j] = l - 1 - j;
  const std::vector<std::size_t> users(l, user);
  const Tensor item_part =
      nc::add(nc::gather_rows(emb.item, items), nc::gather_rows(recency_, recency));
  return nc::concat_cols(item_part, nc::gather_rows(emb.user, users));
}

Tensor Recommender::logits(const EmbeddingTable& emb, std::span<const ItemId> window,
                           UserId user) const {
  const Tensor h = stack_.forward_last(input_rows(emb, window, user));
  const Tensor h_item = nc::slice_cols(h, 0, shape_.item_dim);
  const Tensor h_user = nc::slice_cols(h, shape_.item_dim, shape_.user_dim);
  const std::size_t ids[] = {user};
  // The user half contributes the same scalar to every item.
  const Tensor user_term = nc::matmul_transposed(h_user, nc::gather_rows(emb.user, ids));
  return nc::add(nc::matmul_transposed(h_item, emb.item), user_term);
}

Tensor Recommender::probabilities(const EmbeddingTable& emb, std::span<const ItemId> window,
                                  UserId user) const {
  return nc::softmax(logits(emb, window, user));
}

RankedList Recommender::score_next(const EmbeddingTable& emb, std::span<const ItemId> window,
                                   UserId user) const {
  nc::TapeScope no_recording(nullptr);
  const Tensor p = probabilities(emb, window, user);
  return RankedList::from_scores(std::vector<double>(p.values().begin(), p.values().end()));
}

void Recommender::append_parameters(std::vector<NamedTensor>& out) const {
  out.push_back({"recommender.recency", recency_});
  stack_.append_parameters("recommender.stack", out);
}

std::size_t Recommender::parameter_count(const RecommenderShape& shape) {
  return shape.max_length * shape.item_dim +
         GatedAttentionStack::parameter_count({shape.item_dim + shape.user_dim, shape.ff_width},
                                              shape.blocks);
}

Tensor cross_entropy(const Tensor& probabilities, ItemId truth) {
  if (probabilities.rows() != 1 || truth >= probabilities.cols()) {
    throw ContractError("cross_entropy: truth " + std::to_string(truth) + " outside catalog");
  }
  return nc::neg(nc::log(nc::add_constant(nc::pick(probabilities, 0, truth), kLogEpsilon)));
}

double cross_entropy(const RankedList& ranked, ItemId truth) {
  if (truth >= ranked.size()) {
    throw ContractError("cross_entropy: truth " + std::to_string(truth) + " outside catalog");
  }
  return -std::log(ranked.scores[truth] + kLogEpsilon);
}

std::vector<ItemId> recommend_topk(const RankedList& ranked, std::size_t k) {
  if (k < 1 || k > ranked.size()) {
    throw ContractError("recommend_topk: K=" + std::to_string(k) + " outside [1, " +
                        std::to_string(ranked.size()) + "]");
  }
  return {ranked.order.begin(), ranked.order.begin() + static_cast<std::ptrdiff_t>(k)};
}

}  // namespace sar::model
