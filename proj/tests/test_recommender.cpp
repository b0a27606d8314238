#include "helpers.hpp"

#include "sar/errors.hpp"
#include "sar/model/checkpoint.hpp"
#include "sar/model/recommender.hpp"
#include "sar/model/sar_model.hpp"
#include "sar/numcore/adam.hpp"
#include "sar/numcore/ops.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

using namespace sar;
using namespace sar::model;

namespace fs = std::filesystem;

TEST_CASE("ranking ties break by ascending item id") {
  const auto ranked = RankedList::from_scores({0.2, 0.3, 0.2, 0.3});
  CHECK(ranked.order == std::vector<ItemId>{1, 3, 0, 2});
  CHECK(ranked.rank_of(2) == 4);
  CHECK_THROWS_AS(ranked.rank_of(4), ContractError);
}

TEST_CASE("rank_in_scores agrees with sorting") {
  nc::Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> scores(1 + rng.below(40));
    // Coarse values force ties.
    for (double& s : scores) s = static_cast<double>(rng.below(6));
    const auto ranked = RankedList::from_scores(scores);
    for (ItemId i = 0; i < scores.size(); ++i) CHECK(rank_in_scores(scores, i) == ranked.rank_of(i));
  }
}

TEST_CASE("top-K") {
  const auto ranked = RankedList::from_scores({0.1, 0.5, 0.15, 0.25});
  CHECK(recommend_topk(ranked, 1) == std::vector<ItemId>{1});
  CHECK(recommend_topk(ranked, 4) == std::vector<ItemId>{1, 3, 2, 0});
  CHECK_THROWS_AS(recommend_topk(ranked, 0), ContractError);
  CHECK_THROWS_AS(recommend_topk(ranked, 5), ContractError);
}

TEST_CASE("cross-entropy values") {
  CHECK(cross_entropy(RankedList::from_scores({1.0, 0.0}), 0) == doctest::Approx(0.0).epsilon(1e-11));
  CHECK(cross_entropy(RankedList::from_scores({0.25, 0.25, 0.25, 0.25}), 2) ==
        doctest::Approx(std::log(4.0)).epsilon(1e-10));
  double previous = INFINITY;
  for (double r : {0.1, 0.5, 0.9}) {
    const double l = cross_entropy(RankedList::from_scores({r, 1 - r}), 0);
    CHECK(l < previous);
    CHECK(l >= 0.0);
    previous = l;
  }
  CHECK_THROWS_AS(cross_entropy(RankedList::from_scores({0.5, 0.5}), 2), ContractError);
}

TEST_CASE("scores form a distribution and a permutation") {
  const Config config = test::tiny_config();
  SarModel model(config.model, 3, 30, 4);
  const std::vector<ItemId> window{1, 7, 7, 2};
  const auto ranked = model.recommender.score_next(model.embeddings, window, 2);
  REQUIRE(ranked.size() == 30);
  CHECK(std::accumulate(ranked.scores.begin(), ranked.scores.end(), 0.0) ==
        doctest::Approx(1.0).epsilon(1e-9));
  for (double s : ranked.scores) CHECK(s > 0.0);
  auto order = ranked.order;
  std::sort(order.begin(), order.end());
  for (ItemId i = 0; i < 30; ++i) CHECK(order[i] == i);
  CHECK_THROWS_AS(model.recommender.score_next(model.embeddings, std::vector<ItemId>{}, 0),
                  ContractError);
  CHECK_THROWS_AS(model.recommender.score_next(model.embeddings, window, 3), ContractError);
}

TEST_CASE("a single-item catalog always scores 1") {
  Config config = test::tiny_config();
  SarModel model(config.model, 1, 1, 4);
  const auto ranked = model.recommender.score_next(model.embeddings, std::vector<ItemId>{0, 0}, 0);
  REQUIRE(ranked.size() == 1);
  CHECK(ranked.scores[0] == 1.0);
}

TEST_CASE("scoring depends on the user") {
  const Config config = test::tiny_config();
  SarModel model(config.model, 3, 30, 4);
  const std::vector<ItemId> window{1, 7, 2};
  const auto a = model.recommender.logits(model.embeddings, window, 0);
  const auto b = model.recommender.logits(model.embeddings, window, 1);
  double diff = 0.0;
  for (std::size_t i = 0; i < 30; ++i) diff = std::max(diff, std::abs(a.values()[i] - b.values()[i]));
  CHECK(diff > 1e-9);
}

TEST_CASE("memorizing a two-step sequence recovers the logged next item") {
  const Config config = test::tiny_config();
  SarModel model(config.model, 2, 30, 5);
  nc::Adam adam(model.recommender_parameters(), {.lr = 1e-2});
  const std::vector<ItemId> window{4, 11};
  const ItemId target = 23;
  double first = 0.0, last = 0.0;
  for (int step = 0; step < 500; ++step) {
    adam.zero_grad();
    nc::Tape tape;
    nc::TapeScope scope(&tape);
    const Tensor loss = cross_entropy(model.recommender.probabilities(model.embeddings, window, 1), target);
    if (step == 0) first = loss.item();
    last = loss.item();
    tape.backward(loss);
    adam.step();
  }
  CHECK(last < 0.1 * first);
  const auto ranked = model.recommender.score_next(model.embeddings, window, 1);
  CHECK(recommend_topk(ranked, 1).front() == target);
}

TEST_CASE("checkpoint round trip and load errors") {
  const fs::path dir = fs::temp_directory_path() / "sar_ckpt_test";
  fs::create_directories(dir);
  const Config config = test::tiny_config();
  SarModel a(config.model, 3, 30, 1);
  save_checkpoint(dir / "a.bin", a.named_parameters());

  SarModel b(config.model, 3, 30, 2);
  b.load_parameters(load_checkpoint(dir / "a.bin"));
  const auto pa = a.named_parameters();
  const auto pb = b.named_parameters();
  REQUIRE(pa.size() == pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    CHECK(pa[i].name == pb[i].name);
    CHECK(std::equal(pa[i].tensor.values().begin(), pa[i].tensor.values().end(),
                     pb[i].tensor.values().begin()));
  }

  SarModel wrong(config.model, 3, 31, 1);
  CHECK_THROWS_AS(wrong.load_parameters(load_checkpoint(dir / "a.bin")), LoadError);
  CHECK_THROWS_AS(load_checkpoint(dir / "missing.bin"), LoadError);
  std::ofstream(dir / "junk.bin") << "not a checkpoint at all";
  CHECK_THROWS_AS(load_checkpoint(dir / "junk.bin"), LoadError);
  {
    std::ifstream in(dir / "a.bin", std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), {});
    std::ofstream(dir / "cut.bin", std::ios::binary) << bytes.substr(0, bytes.size() / 2);
  }
  CHECK_THROWS_AS(load_checkpoint(dir / "cut.bin"), LoadError);
  fs::remove_all(dir);
}
