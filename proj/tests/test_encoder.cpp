#include "sar/errors.hpp"
#include "sar/model/encoder.hpp"
#include "sar/model/gated_attention.hpp"
#include "sar/model/sar_model.hpp"
#include "sar/numcore/ops.hpp"

#include <doctest.h>

#include <cmath>

using namespace sar;
using namespace sar::model;

namespace {

struct Fixture {
  nc::Rng rng{21};
  EncoderShape shape{.item_dim = 16, .hidden = 16, .ff_width = 32, .blocks = 2,
                     .state_dim = 150, .max_length = 12, .gate_bias = 0.0};
  EmbeddingTable emb = EmbeddingTable::create(30, 4, 16, 12, rng);
  StateEncoder encoder{shape, emb.item, emb.positional, rng};
};

double max_abs_diff(const Tensor& a, const Tensor& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a.values()[i] - b.values()[i]));
  return worst;
}

Tensor row_of(const Tensor& x, std::size_t r) { return nc::slice_rows(x, r, 1); }

}  // namespace

TEST_CASE("embed_sequence adds item and positional rows") {
  Fixture f;
  const std::vector<ItemId> one{7};
  const Tensor e = f.encoder.embed_sequence(one);
  REQUIRE(e.shape() == nc::Shape{1, 16});
  for (std::size_t c = 0; c < 16; ++c) CHECK(e(0, c) == f.emb.item(7, c) + f.emb.positional(0, c));

  const std::vector<ItemId> items{3, 9, 1, 4};
  const std::vector<ItemId> permuted{4, 1, 9, 3};
  const Tensor a = f.encoder.embed_sequence(items);
  const Tensor b = f.encoder.embed_sequence(permuted);
  for (std::size_t j = 0; j < 4; ++j) {
    for (std::size_t c = 0; c < 16; ++c) {
      CHECK(a(j, c) - f.emb.item(items[j], c) == doctest::Approx(f.emb.positional(j, c)));
      CHECK(b(j, c) - f.emb.item(permuted[j], c) == doctest::Approx(f.emb.positional(j, c)));
    }
  }

  for (double& v : f.emb.positional.mutable_values()) v = 0.0;
  const Tensor raw = f.encoder.embed_sequence(items);
  for (std::size_t j = 0; j < 4; ++j) {
    for (std::size_t c = 0; c < 16; ++c) CHECK(raw(j, c) == f.emb.item(items[j], c));
  }
}

TEST_CASE("capacity and empty-input errors") {
  Fixture f;
  const std::vector<ItemId> too_long(13, 1);
  CHECK_THROWS_AS(f.encoder.embed_sequence(too_long), CapacityError);
  CHECK_THROWS_AS(f.encoder.encode(std::vector<ItemId>{}), ContractError);
}

TEST_CASE("gated block with a single position depends only on that item") {
  nc::Rng rng(4);
  const BlockParams block = make_block({8, 16}, 0.0, rng);
  const Tensor x = embedding_init(1, 8, rng);
  const Tensor y = gated_attention_block(block, x);
  CHECK(y.shape() == nc::Shape{1, 8});
  for (int trial = 0; trial < 3; ++trial) {
    const Tensor longer = embedding_init(4, 8, rng);
    std::vector<double> values(x.values().begin(), x.values().end());
    values.insert(values.end(), longer.values().begin(), longer.values().end());
    const Tensor seq = Tensor::from({5, 8}, values);
    CHECK(max_abs_diff(row_of(gated_attention_block(block, seq), 0), y) < 1e-15);
  }
}

TEST_CASE("gated block is causal") {
  nc::Rng rng(5);
  const BlockParams block = make_block({8, 16}, 0.0, rng);
  Tensor x = embedding_init(6, 8, rng);
  const Tensor before = gated_attention_block(block, x);
  for (std::size_t c = 0; c < 8; ++c) x.mutable_values()[5 * 8 + c] += 0.3;
  for (std::size_t c = 0; c < 8; ++c) x.mutable_values()[4 * 8 + c] -= 0.2;
  const Tensor after = gated_attention_block(block, x);
  for (std::size_t j = 0; j < 4; ++j) CHECK(max_abs_diff(row_of(before, j), row_of(after, j)) == 0.0);
  CHECK(max_abs_diff(row_of(before, 5), row_of(after, 5)) > 1e-6);

  const Tensor last = gated_attention_block(block, x, true);
  CHECK(max_abs_diff(last, row_of(after, 5)) < 1e-14);
}

TEST_CASE("closed gates pass the residual stream through") {
  nc::Rng rng(6);
  const BlockParams block = make_block({8, 16}, -60.0, rng);
  const Tensor x = embedding_init(5, 8, rng);
  CHECK(max_abs_diff(gated_attention_block(block, x), x) < 1e-12);

  const BlockParams open = make_block({8, 16}, 0.0, rng);
  CHECK(max_abs_diff(gated_attention_block(open, x), x) > 1e-4);
}

TEST_CASE("state vector has 150 entries and depends on order") {
  Fixture f;
  for (std::size_t t : {1u, 3u, 12u}) {
    std::vector<ItemId> items;
    for (std::size_t j = 0; j < t; ++j) items.push_back((j * 7) % 30);
    CHECK(f.encoder.encode(items).shape() == nc::Shape{1, 150});
  }
  nc::Rng rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<ItemId> items;
    for (int j = 0; j < 5; ++j) items.push_back(rng.below(30));
    if (items.front() == items.back()) items.back() = (items.back() + 1) % 30;
    std::vector<ItemId> reversed(items.rbegin(), items.rend());
    CHECK(max_abs_diff(f.encoder.encode(items), f.encoder.encode(reversed)) > 1e-9);
  }
}

TEST_CASE("encode_all row j equals encode of the prefix") {
  Fixture f;
  const std::vector<ItemId> items{5, 2, 8, 8, 1, 29, 0};
  const Tensor all = f.encoder.encode_all(items);
  REQUIRE(all.rows() == items.size());
  for (std::size_t j = 0; j < items.size(); ++j) {
    const Tensor prefix = f.encoder.encode(std::span<const ItemId>(items).first(j + 1));
    CHECK(max_abs_diff(row_of(all, j), prefix) < 1e-12);
  }
}

TEST_CASE("state encoding ignores the user") {
  ModelConfig config;
  config.item_dim = config.user_dim = config.encoder_hidden = 8;
  config.encoder_ff = config.recommender_ff = 16;
  config.max_length = 10;
  config.actor_hidden = config.critic_hidden = 4;
  SarModel model(config, 3, 20, 1);
  const std::vector<ItemId> items{1, 2, 3};
  const Tensor a = model.encoder.encode(items);
  // Perturbing every user embedding leaves the state untouched.
  for (double& v : model.embeddings.user.mutable_values()) v += 1.0;
  CHECK(max_abs_diff(a, model.encoder.encode(items)) == 0.0);
}

TEST_CASE("parameter counts match the tensors") {
  Fixture f;
  std::vector<NamedTensor> params;
  f.encoder.append_parameters(params, true);
  std::size_t n = 0;
  for (const auto& p : params) n += p.tensor.size();
  CHECK(n == StateEncoder::parameter_count(f.shape, true, 30));

  // Analytic count of one block at width d, feed-forward f: LN 2·2d,
  // Q/K/V 3d², two gates 2·(2d² + 2d), FF d·f + f + f·d + d; stack adds 2d.
  const std::size_t d = 16, ff = 32;
  const std::size_t block = 4 * d + 3 * d * d + 2 * (2 * d * d + 2 * d) + 2 * d * ff + ff + d;
  CHECK(block_parameter_count({d, ff}) == block);
  CHECK(GatedAttentionStack::parameter_count({d, ff}, 2) == 2 * block + 2 * d);

  ModelConfig config;
  config.item_dim = config.user_dim = config.encoder_hidden = 8;
  config.encoder_ff = config.recommender_ff = 16;
  config.max_length = 10;
  config.actor_hidden = config.critic_hidden = 4;
  SarModel model(config, 3, 20, 1);
  CHECK(model.parameter_count() == SarModel::expected_parameter_count(config, 3, 20));
}
