#pragma once

#include "sar/data/dataset.hpp"
#include "sar/model/sar_model.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sar::eval {

using data::ItemId;
using data::UserId;

enum class Split { kVal, kTest };

const char* split_name(Split split);

// The history a split conditions on: the training prefix for validation,
// the prefix plus the validation item for test.
std::vector<ItemId> split_history(const data::UserSplit& user, Split split);
ItemId split_target(const data::UserSplit& user, Split split);

struct ScoredUser {
  std::vector<double> scores;  // one per catalog item, higher is better
  std::size_t length = 0;      // adapted length used (0 when not applicable)
};

// Scores the whole catalog for one user from the history alone.
using Scorer = std::function<ScoredUser(UserId user, std::span<const ItemId> history)>;

struct UserResult {
  UserId user = 0;
  std::size_t rank = 0;  // 1-based, ties broken by ascending item id
  std::size_t length = 0;
};

struct MetricsReport {
  std::string split;
  std::map<std::size_t, double> ndcg;
  std::map<std::size_t, double> hr;
  std::size_t num_users = 0;
  double mean_length = 0.0;
  double length_stddev = 0.0;
  std::vector<UserResult> per_user;
  std::uint64_t seed = 0;
  std::string config_hash;
};

// Averages NDCG@K and HR@K over users from per-user ranks.
MetricsReport summarize(std::vector<UserResult> per_user, std::span<const std::size_t> ks);

// Runs `scorer` for every user in the split. With workers > 1 users are
// scored concurrently; the report does not depend on the worker count.
MetricsReport evaluate_with(const data::SplitDataset& dataset, Split split,
                            std::span<const std::size_t> ks, const Scorer& scorer,
                            std::size_t workers = 1);

// Noiseless actor (or the fixed length when given), then full-catalog logits.
// Histories longer than max_length keep their most recent items.
Scorer model_scorer(const SarModel& model, std::optional<std::size_t> fixed_length);

MetricsReport evaluate(const SarModel& model, const data::SplitDataset& dataset, Split split,
                       std::span<const std::size_t> ks,
                       std::optional<std::size_t> fixed_length = std::nullopt,
                       std::size_t workers = 1);

// One JSON object per line: a summary record, then one record per user.
void write_metrics_jsonl(std::ostream& out, const MetricsReport& report);
void write_metrics_table(std::ostream& out, const MetricsReport& report);

}  // namespace sar::eval
