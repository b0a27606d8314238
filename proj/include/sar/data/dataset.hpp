#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace sar::data {

using UserId = std::size_t;
using ItemId = std::size_t;

// One training item, one validation item, one test item.
inline constexpr std::size_t kMinSequenceLength = 3;

// Bijection between external string ids and dense integer ids.
class Catalog {
 public:
  Catalog() = default;
  // Dense id i is assigned to users[i] / items[i]. Names must be unique.
  Catalog(std::vector<std::string> users, std::vector<std::string> items);

  std::size_t num_users() const { return users_.size(); }
  std::size_t num_items() const { return items_.size(); }

  std::optional<UserId> find_user(std::string_view name) const;
  std::optional<ItemId> find_item(std::string_view name) const;
  const std::string& user_name(UserId id) const { return users_.at(id); }
  const std::string& item_name(ItemId id) const { return items_.at(id); }

 private:
  std::vector<std::string> users_;
  std::vector<std::string> items_;
  std::unordered_map<std::string, UserId> user_index_;
  std::unordered_map<std::string, ItemId> item_index_;
};

struct InteractionSequence {
  UserId user = 0;
  std::vector<ItemId> items;
  std::vector<std::int64_t> timestamps;
};

struct LoadStats {
  std::size_t lines = 0;
  std::size_t interactions = 0;
  std::size_t users_dropped = 0;
  std::size_t interactions_dropped = 0;
};

struct Dataset {
  Catalog catalog;
  std::vector<InteractionSequence> sequences;  // indexed by UserId
  LoadStats stats;
};

// Reads `user<TAB>item<TAB>timestamp` lines. Sequences are sorted by
// timestamp with file order breaking ties; users with fewer than
// kMinSequenceLength interactions are dropped. Dense ids follow the sorted
// external ids (numerically when every id is an integer), so the result does
// not depend on line order.
Dataset load_tsv(const std::filesystem::path& path);
Dataset parse_tsv(std::istream& in);

// Normalized dump in the input format, users in id order.
void write_tsv(const Dataset& dataset, const std::filesystem::path& path);
// Sidecar `key=value` lines: users, items, interactions, lines, users_dropped,
// interactions_dropped, mean_length, min_length, max_length.
void write_stats(const Dataset& dataset, const std::filesystem::path& path);

struct UserSplit {
  UserId user = 0;
  std::vector<ItemId> train_prefix;
  ItemId val_item = 0;
  ItemId test_item = 0;
};

struct SplitDataset {
  std::size_t num_users = 0;
  std::size_t num_items = 0;
  std::vector<UserSplit> users;
};

// Leave-one-out: last item tests, second-last validates, the rest trains.
SplitDataset leave_one_out(std::span<const InteractionSequence> sequences, std::size_t num_users,
                           std::size_t num_items);
SplitDataset leave_one_out(const Dataset& dataset);

}  // namespace sar::data
