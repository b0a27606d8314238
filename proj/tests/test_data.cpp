#include "sar/data/dataset.hpp"
#include "sar/data/synthetic.hpp"
#include "sar/errors.hpp"
#include "sar/numcore/rng.hpp"

#include <doctest.h>

#include <sstream>

using namespace sar;
using namespace sar::data;

namespace {

Dataset parse(const std::string& text) {
  std::istringstream in(text);
  return parse_tsv(in);
}

std::vector<ItemId> names_to_ids(const Dataset& d, const std::vector<std::string>& names) {
  std::vector<ItemId> ids;
  for (const auto& n : names) ids.push_back(*d.catalog.find_item(n));
  return ids;
}

}  // namespace

TEST_CASE("minimal corpus: two users with three interactions") {
  const Dataset d = parse("u1\ta\t1\nu1\tb\t2\nu1\tc\t3\nu2\tc\t5\nu2\ta\t4\nu2\tb\t6\n");
  REQUIRE(d.catalog.num_users() == 2);
  CHECK(d.catalog.num_items() == 3);
  REQUIRE(d.sequences.size() == 2);
  const UserId u2 = *d.catalog.find_user("u2");
  CHECK(d.sequences[u2].items == names_to_ids(d, {"a", "c", "b"}));
  CHECK(d.stats.users_dropped == 0);
}

TEST_CASE("users with two interactions are dropped and counted") {
  const Dataset d = parse("u1\ta\t1\nu1\tb\t2\nu1\tc\t3\nu2\ta\t1\nu2\tb\t2\n");
  CHECK(d.catalog.num_users() == 1);
  CHECK(d.stats.users_dropped == 1);
  CHECK(d.stats.interactions_dropped == 2);
}

TEST_CASE("equal timestamps keep file order") {
  const Dataset d = parse("u\tx\t1\nu\ty\t1\nu\tz\t0\n");
  CHECK(d.sequences[0].items == names_to_ids(d, {"z", "x", "y"}));
}

TEST_CASE("line order does not change the loaded dataset") {
  nc::Rng rng(3);
  std::vector<std::string> lines;
  for (int u = 0; u < 30; ++u) {
    const std::size_t n = 3 + rng.below(8);
    for (std::size_t t = 0; t < n; ++t) {
      lines.push_back(std::to_string(u) + "\t" + std::to_string(rng.below(40)) + "\t" +
                      std::to_string(t * 10 + rng.below(5)));
    }
  }
  auto join = [](const std::vector<std::string>& ls) {
    std::string s;
    for (const auto& l : ls) s += l + "\n";
    return s;
  };
  const Dataset a = parse(join(lines));
  std::vector<std::string> shuffled = lines;
  rng.shuffle(std::span<std::string>(shuffled));
  const Dataset b = parse(join(shuffled));
  REQUIRE(a.catalog.num_users() == b.catalog.num_users());
  REQUIRE(a.catalog.num_items() == b.catalog.num_items());
  for (UserId u = 0; u < a.catalog.num_users(); ++u) {
    CHECK(a.catalog.user_name(u) == b.catalog.user_name(u));
    CHECK(a.sequences[u].items == b.sequences[u].items);
  }
}

TEST_CASE("numeric ids are ordered numerically") {
  const Dataset d = parse("10\t2\t1\n10\t10\t2\n10\t9\t3\n9\t2\t1\n9\t2\t2\n9\t2\t3\n");
  CHECK(d.catalog.user_name(0) == "9");
  CHECK(d.catalog.item_name(0) == "2");
  CHECK(d.catalog.item_name(2) == "10");
}

TEST_CASE("parse errors carry the line number") {
  try {
    parse("u\ta\t1\nu\tb\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(parse("u\ta\tnoon\n"), ParseError);
  CHECK_THROWS_AS(parse(""), DataError);
  CHECK_THROWS_AS(parse("u\ta\t1\n"), DataError);
  CHECK_THROWS_AS(load_tsv("/nonexistent/data.tsv"), DataError);
}

TEST_CASE("leave_one_out examples") {
  const std::vector<InteractionSequence> seqs = {{0, {0, 1, 2, 3, 4}, {}}, {1, {5, 6, 7}, {}}};
  const SplitDataset s = leave_one_out(seqs, 2, 8);
  REQUIRE(s.users.size() == 2);
  CHECK(s.users[0].train_prefix == std::vector<ItemId>{0, 1, 2});
  CHECK(s.users[0].val_item == 3);
  CHECK(s.users[0].test_item == 4);
  CHECK(s.users[1].train_prefix == std::vector<ItemId>{5});
  CHECK(s.users[1].val_item == 6);
  CHECK(s.users[1].test_item == 7);

  const std::vector<InteractionSequence> short_seq = {{0, {1, 2}, {}}};
  CHECK_THROWS_AS(leave_one_out(short_seq, 1, 3), ContractError);
}

TEST_CASE("leave_one_out reconstructs every sequence") {
  nc::Rng rng(17);
  std::vector<InteractionSequence> seqs(1000);
  for (std::size_t u = 0; u < seqs.size(); ++u) {
    seqs[u].user = u;
    const std::size_t n = 3 + rng.below(50);
    for (std::size_t t = 0; t < n; ++t) seqs[u].items.push_back(rng.below(100));
  }
  const SplitDataset s = leave_one_out(seqs, seqs.size(), 100);
  for (std::size_t u = 0; u < seqs.size(); ++u) {
    auto rebuilt = s.users[u].train_prefix;
    rebuilt.push_back(s.users[u].val_item);
    rebuilt.push_back(s.users[u].test_item);
    CHECK(rebuilt == seqs[u].items);
  }
}

TEST_CASE("synthetic corpus is deterministic") {
  SyntheticSpec spec;
  spec.num_users = 20;
  const auto a = generate_synthetic(spec);
  const auto b = generate_synthetic(spec);
  CHECK(a.windows == b.windows);
  for (std::size_t u = 0; u < 20; ++u) CHECK(a.dataset.sequences[u].items == b.dataset.sequences[u].items);
  spec.seed = 2;
  const auto c = generate_synthetic(spec);
  bool differs = false;
  for (std::size_t u = 0; u < 20; ++u) differs |= a.dataset.sequences[u].items != c.dataset.sequences[u].items;
  CHECK(differs);
}

TEST_CASE("noise 0 and window 1 give a first-order Markov chain") {
  SyntheticSpec spec;
  spec.num_users = 10;
  spec.num_items = 50;
  spec.windows = {1};
  spec.noise_rate = 0.0;
  const auto corpus = generate_synthetic(spec);
  for (const auto& seq : corpus.dataset.sequences) {
    for (std::size_t t = 1; t < seq.items.size(); ++t) {
      CHECK(seq.items[t] == synthetic_successor(spec.seed, seq.items[t - 1], spec.num_items));
    }
  }
}

TEST_CASE("window w copies from w steps back") {
  SyntheticSpec spec;
  spec.num_users = 10;
  spec.windows = {2, 20};
  spec.noise_rate = 0.0;
  const auto corpus = generate_synthetic(spec);
  for (std::size_t u = 0; u < spec.num_users; ++u) {
    const auto& items = corpus.dataset.sequences[u].items;
    const std::size_t w = corpus.windows[u];
    for (std::size_t t = w; t < items.size(); ++t) {
      CHECK(items[t] == synthetic_successor(spec.seed, items[t - w], spec.num_items));
    }
  }
}

TEST_CASE("invalid synthetic specs") {
  SyntheticSpec spec;
  spec.num_items = 9;
  CHECK_THROWS_AS(generate_synthetic(spec), ConfigError);
  spec = {};
  spec.noise_rate = 1.5;
  CHECK_THROWS_AS(generate_synthetic(spec), ConfigError);
  spec = {};
  spec.min_length = 2;
  CHECK_THROWS_AS(generate_synthetic(spec), ConfigError);
}
