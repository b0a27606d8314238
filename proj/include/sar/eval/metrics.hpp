#pragma once

#include "sar/model/recommender.hpp"

#include <cstddef>

namespace sar::eval {

// Single relevant item: NDCG@K = 1/log2(rank+1) when rank <= K, else 0.
double ndcg_from_rank(std::size_t rank, std::size_t k);
double hr_from_rank(std::size_t rank, std::size_t k);

// Both throw ContractError unless 1 <= K <= |I| and truth is a catalog item.
double ndcg_at_k(const model::RankedList& ranked, data::ItemId truth, std::size_t k);
double hr_at_k(const model::RankedList& ranked, data::ItemId truth, std::size_t k);

}  // namespace sar::eval
