#include "sar/eval/metrics.hpp"

#include "sar/errors.hpp"

#include <cmath>
#include <string>

namespace sar::eval {

namespace {

void check_arguments(const model::RankedList& ranked, data::ItemId truth, std::size_t k) {
  if (k < 1 || k > ranked.size()) {
    throw ContractError("K=" + std::to_string(k) + " outside [1, " + std::to_string(ranked.size()) +
                        "]");
  }
  if (truth >= ranked.size()) {
    throw ContractError("truth item " + std::to_string(truth) + " is not in the catalog");
  }
}

}  // namespace

double ndcg_from_rank(std::size_t rank, std::size_t k) {
  if (rank < 1 || rank > k) return 0.0;
  return 1.0 / std::log2(static_cast<double>(rank) + 1.0);
}

double hr_from_rank(std::size_t rank, std::size_t k) {
  return rank >= 1 && rank <= k ? 1.0 : 0.0;
}

double ndcg_at_k(const model::RankedList& ranked, data::ItemId truth, std::size_t k) {
  check_arguments(ranked, truth, k);
  return ndcg_from_rank(ranked.rank_of(truth), k);
}

double hr_at_k(const model::RankedList& ranked, data::ItemId truth, std::size_t k) {
  check_arguments(ranked, truth, k);
  return hr_from_rank(ranked.rank_of(truth), k);
}

}  // namespace sar::eval
