#include "sar/data/dataset.hpp"

#include "sar/errors.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <sstream>

namespace sar::data {

Catalog::Catalog(std::vector<std::string> users, std::vector<std::string> items)
    : users_(std::move(users)), items_(std::move(items)) {
  for (std::size_t i = 0; i < users_.size(); ++i) {
    if (!user_index_.emplace(users_[i], i).second) {
      throw DataError("duplicate user id '" + users_[i] + "'");
    }
  }
  for (std::size_t i = 0; i < items_.size(); ++i) {
    if (!item_index_.emplace(items_[i], i).second) {
      throw DataError("duplicate item id '" + items_[i] + "'");
    }
  }
}

std::optional<UserId> Catalog::find_user(std::string_view name) const {
  const auto it = user_index_.find(std::string(name));
  if (it == user_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<ItemId> Catalog::find_item(std::string_view name) const {
  const auto it = item_index_.find(std::string(name));
  if (it == item_index_.end()) return std::nullopt;
  return it->second;
}

namespace {

struct RawInteraction {
  std::string item;
  std::int64_t timestamp;
  std::size_t line;
};

bool is_integer(const std::string& s) {
  if (s.empty()) return false;
  std::size_t start = (s[0] == '-') ? 1 : 0;
  if (start == s.size()) return false;
  return std::all_of(s.begin() + static_cast<std::ptrdiff_t>(start), s.end(),
                     [](char c) { return c >= '0' && c <= '9'; });
}

// Integer ids sort numerically when every id is an integer, lexicographically otherwise.
std::vector<std::string> sorted_ids(std::vector<std::string> ids) {
  const bool numeric = std::all_of(ids.begin(), ids.end(), is_integer);
  if (numeric) {
    std::sort(ids.begin(), ids.end(), [](const std::string& a, const std::string& b) {
      const bool na = a[0] == '-';
      const bool nb = b[0] == '-';
      if (na != nb) return na;
      const std::string_view da = std::string_view(a).substr(na ? 1 : 0);
      const std::string_view db = std::string_view(b).substr(nb ? 1 : 0);
      auto strip = [](std::string_view v) {
        const auto pos = v.find_first_not_of('0');
        return pos == std::string_view::npos ? std::string_view("0") : v.substr(pos);
      };
      const auto sa = strip(da);
      const auto sb = strip(db);
      const bool less = sa.size() != sb.size() ? sa.size() < sb.size() : sa < sb;
      const bool greater = sa.size() != sb.size() ? sa.size() > sb.size() : sa > sb;
      if (!less && !greater) return a < b;  // same value, different spelling
      return na ? greater : less;
    });
  } else {
    std::sort(ids.begin(), ids.end());
  }
  return ids;
}

std::string_view trim_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

}  // namespace

Dataset parse_tsv(std::istream& in) {
  // std::map keeps grouping independent of hash iteration order.
  std::map<std::string, std::vector<RawInteraction>> by_user;
  LoadStats stats;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view text = trim_cr(line);
    if (text.find_first_not_of(" \t") == std::string_view::npos) continue;
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
      const std::size_t tab = text.find('\t', start);
      fields.push_back(text.substr(start, tab == std::string_view::npos ? std::string_view::npos
                                                                         : tab - start));
      if (tab == std::string_view::npos) break;
      start = tab + 1;
    }
    if (fields.size() != 3) {
      throw ParseError("expected 3 tab-separated fields, got " + std::to_string(fields.size()),
                       line_no);
    }
    if (fields[0].empty() || fields[1].empty()) throw ParseError("empty user or item id", line_no);
    std::int64_t timestamp = 0;
    const auto* first = fields[2].data();
    const auto* last = first + fields[2].size();
    const auto [ptr, ec] = std::from_chars(first, last, timestamp);
    if (ec != std::errc() || ptr != last) {
      throw ParseError("invalid timestamp '" + std::string(fields[2]) + "'", line_no);
    }
    by_user[std::string(fields[0])].push_back(
        RawInteraction{std::string(fields[1]), timestamp, line_no});
    ++stats.interactions;
  }
  stats.lines = line_no;
  if (stats.interactions == 0) throw DataError("empty dataset: no interactions");

  std::vector<std::string> kept_users;
  std::vector<std::string> item_names;
  for (auto& [user, events] : by_user) {
    if (events.size() < kMinSequenceLength) {
      ++stats.users_dropped;
      stats.interactions_dropped += events.size();
      continue;
    }
    kept_users.push_back(user);
    for (const auto& e : events) item_names.push_back(e.item);
  }
  if (kept_users.empty()) {
    throw DataError("empty dataset: no user has " + std::to_string(kMinSequenceLength) +
                    " or more interactions");
  }
  std::sort(item_names.begin(), item_names.end());
  item_names.erase(std::unique(item_names.begin(), item_names.end()), item_names.end());

  Dataset dataset;
  dataset.catalog = Catalog(sorted_ids(kept_users), sorted_ids(std::move(item_names)));
  dataset.stats = stats;
  dataset.sequences.resize(dataset.catalog.num_users());
  for (UserId u = 0; u < dataset.catalog.num_users(); ++u) {
    auto& events = by_user.at(dataset.catalog.user_name(u));
    std::stable_sort(events.begin(), events.end(),
                     [](const RawInteraction& a, const RawInteraction& b) {
                       return a.timestamp < b.timestamp;
                     });
    InteractionSequence& seq = dataset.sequences[u];
    seq.user = u;
    for (const auto& e : events) {
      seq.items.push_back(*dataset.catalog.find_item(e.item));
      seq.timestamps.push_back(e.timestamp);
    }
  }
  return dataset;
}

Dataset load_tsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset '" + path.string() + "'");
  return parse_tsv(in);
}

void write_tsv(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  for (const auto& seq : dataset.sequences) {
    const std::string& user = dataset.catalog.user_name(seq.user);
    for (std::size_t i = 0; i < seq.items.size(); ++i) {
      out << user << '\t' << dataset.catalog.item_name(seq.items[i]) << '\t' << seq.timestamps[i]
          << '\n';
    }
  }
}

void write_stats(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  std::size_t total = 0;
  std::size_t min_len = 0;
  std::size_t max_len = 0;
  for (const auto& seq : dataset.sequences) {
    total += seq.items.size();
    min_len = min_len == 0 ? seq.items.size() : std::min(min_len, seq.items.size());
    max_len = std::max(max_len, seq.items.size());
  }
  const double mean_len = dataset.sequences.empty()
                              ? 0.0
                              : static_cast<double>(total) / static_cast<double>(dataset.sequences.size());
  std::ostringstream mean_text;
  mean_text.precision(6);
  mean_text << std::fixed << mean_len;
  out << "users=" << dataset.catalog.num_users() << '\n'
      << "items=" << dataset.catalog.num_items() << '\n'
      << "interactions=" << total << '\n'
      << "lines=" << dataset.stats.lines << '\n'
      << "users_dropped=" << dataset.stats.users_dropped << '\n'
      << "interactions_dropped=" << dataset.stats.interactions_dropped << '\n'
      << "mean_length=" << mean_text.str() << '\n'
      << "min_length=" << min_len << '\n'
      << "max_length=" << max_len << '\n';
}

SplitDataset leave_one_out(std::span<const InteractionSequence> sequences, std::size_t num_users,
                           std::size_t num_items) {
  SplitDataset split;
  split.num_users = num_users;
  split.num_items = num_items;
  split.users.reserve(sequences.size());
  for (const auto& seq : sequences) {
    const std::size_t n = seq.items.size();
    if (n < kMinSequenceLength) {
      throw ContractError("leave_one_out: user " + std::to_string(seq.user) + " has only " +
                          std::to_string(n) + " interactions");
    }
    UserSplit entry;
    entry.user = seq.user;
    entry.train_prefix.assign(seq.items.begin(), seq.items.end() - 2);
    entry.val_item = seq.items[n - 2];
    entry.test_item = seq.items[n - 1];
    split.users.push_back(std::move(entry));
  }
  return split;
}

SplitDataset leave_one_out(const Dataset& dataset) {
  return leave_one_out(dataset.sequences, dataset.catalog.num_users(),
                       dataset.catalog.num_items());
}

}  // namespace sar::data
