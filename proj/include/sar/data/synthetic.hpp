#pragma once

#include "sar/data/dataset.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace sar::data {

struct SyntheticSpec {
  std::size_t num_users = 200;
  std::size_t num_items = 500;
  std::size_t min_length = 20;
  std::size_t max_length = 40;
  // Dependence windows w; each user draws one uniformly.
  std::vector<std::size_t> windows{2, 20};
  double noise_rate = 0.2;
  std::uint64_t seed = 1;

  // Throws ConfigError on an invalid spec (e.g. fewer than 10 items).
  void validate() const;
};

struct SyntheticCorpus {
  Dataset dataset;
  // Hidden per-user dependence window, for diagnostics only.
  std::vector<std::size_t> windows;
};

// User u draws window w_u. Its first w_u items are uniform; afterwards the
// next item is, with probability 1 - noise_rate, a seeded hash of the item
// w_u steps back (the oldest of the last w_u items), and uniform otherwise.
// Item and user external ids are their dense ids printed as integers.
SyntheticCorpus generate_synthetic(const SyntheticSpec& spec);

// The deterministic successor used by the generator.
ItemId synthetic_successor(std::uint64_t seed, ItemId item, std::size_t num_items);

// `user<TAB>window` lines.
void write_windows(const SyntheticCorpus& corpus, const std::filesystem::path& path);

}  // namespace sar::data
