#include "sar/data/synthetic.hpp"

#include "sar/errors.hpp"
#include "sar/numcore/rng.hpp"

#include <fstream>
#include <string>

namespace sar::data {

void SyntheticSpec::validate() const {
  if (num_items < 10) throw ConfigError("synthetic corpus needs at least 10 items");
  if (num_users == 0) throw ConfigError("synthetic corpus needs at least one user");
  if (min_length < kMinSequenceLength || min_length > max_length) {
    throw ConfigError("synthetic length range must satisfy 3 <= min <= max");
  }
  if (windows.empty()) throw ConfigError("synthetic corpus needs at least one window");
  for (std::size_t w : windows) {
    if (w < 1) throw ConfigError("synthetic windows must be >= 1");
  }
  if (!(noise_rate >= 0.0 && noise_rate <= 1.0)) {
    throw ConfigError("synthetic noise_rate must lie in [0, 1]");
  }
}

ItemId synthetic_successor(std::uint64_t seed, ItemId item, std::size_t num_items) {
  const std::uint64_t key = nc::Rng::mix(seed ^ 0xA0761D6478BD642FULL);
  return static_cast<ItemId>(nc::Rng::mix(key ^ nc::Rng::mix(item + 1)) % num_items);
}

SyntheticCorpus generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  std::vector<std::string> users(spec.num_users);
  std::vector<std::string> items(spec.num_items);
  for (std::size_t u = 0; u < spec.num_users; ++u) users[u] = std::to_string(u);
  for (std::size_t i = 0; i < spec.num_items; ++i) items[i] = std::to_string(i);

  SyntheticCorpus corpus;
  corpus.dataset.catalog = Catalog(std::move(users), std::move(items));
  corpus.dataset.sequences.resize(spec.num_users);
  corpus.windows.resize(spec.num_users);

  const nc::Rng root(spec.seed);
  std::size_t interactions = 0;
  for (UserId u = 0; u < spec.num_users; ++u) {
    nc::Rng rng = root.split(u);
    const std::size_t window = spec.windows[rng.below(spec.windows.size())];
    const std::size_t length = spec.min_length + rng.below(spec.max_length - spec.min_length + 1);
    InteractionSequence& seq = corpus.dataset.sequences[u];
    seq.user = u;
    seq.items.reserve(length);
    for (std::size_t t = 0; t < length; ++t) {
      // Both draws happen every step so noise decisions do not shift later draws.
      const double coin = rng.uniform();
      const ItemId random_item = rng.below(spec.num_items);
      if (t < window || coin < spec.noise_rate) {
        seq.items.push_back(random_item);
      } else {
        seq.items.push_back(synthetic_successor(spec.seed, seq.items[t - window], spec.num_items));
      }
      seq.timestamps.push_back(static_cast<std::int64_t>(t + 1));
    }
    corpus.windows[u] = window;
    interactions += length;
  }
  corpus.dataset.stats.lines = interactions;
  corpus.dataset.stats.interactions = interactions;
  return corpus;
}

void write_windows(const SyntheticCorpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  for (std::size_t u = 0; u < corpus.windows.size(); ++u) {
    out << corpus.dataset.catalog.user_name(u) << '\t' << corpus.windows[u] << '\n';
  }
}

}  // namespace sar::data
