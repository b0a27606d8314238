#pragma once

#include "sar/data/dataset.hpp"
#include "sar/model/gated_attention.hpp"

#include <span>

namespace sar::model {

using data::ItemId;
using data::UserId;

// item: |I|×d_i, user: |U|×d_u, positional: T_max×d_i (state encoder positions).
struct EmbeddingTable {
  Tensor item;
  Tensor user;
  Tensor positional;

  static EmbeddingTable create(std::size_t num_items, std::size_t num_users, std::size_t dim,
                               std::size_t max_length, nc::Rng& rng);
};

// Uniform(−0.05, 0.05) embedding initialization.
Tensor embedding_init(std::size_t rows, std::size_t cols, nc::Rng& rng);

struct EncoderShape {
  std::size_t item_dim = 100;
  std::size_t hidden = 100;
  std::size_t ff_width = 200;
  std::size_t blocks = 1;
  std::size_t state_dim = 150;
  std::size_t max_length = 200;
  double gate_bias = 0.0;
};

struct StateVector {
  Tensor values;  // 1×d_s
  UserId user = 0;
  std::size_t step = 0;
};

// Maps an interaction prefix to the state vector. Only the item sequence
// enters; the user embedding is not an input.
class StateEncoder {
 public:
  StateEncoder() = default;
  // `item_table` is the shared item embedding, or an encoder-private one.
  StateEncoder(const EncoderShape& shape, Tensor item_table, Tensor positional, nc::Rng& rng);

  // Row j = item_emb[items[j]] + positional[j]. Throws CapacityError past T_max.
  Tensor embed_sequence(std::span<const ItemId> items) const;
  // Row j is the state after items[0..j]; causal, so row j equals
  // encode(items[0..j]).
  Tensor encode_all(std::span<const ItemId> items) const;
  // 1×d_s state of the whole prefix. Throws ContractError when empty.
  Tensor encode(std::span<const ItemId> items) const;

  // Parameters owned by the encoder (positional table, projection, stack,
  // output). The item table is listed only when `include_items` is set.
  void append_parameters(std::vector<NamedTensor>& out, bool include_items) const;
  static std::size_t parameter_count(const EncoderShape& shape, bool include_items,
                                     std::size_t num_items);

  const EncoderShape& shape() const { return shape_; }
  const Tensor& item_table() const { return item_table_; }
  const GatedAttentionStack& stack() const { return stack_; }
  GatedAttentionStack& stack() { return stack_; }
  const Tensor& output_weight() const { return w_out_; }

 private:
  Tensor hidden_states(std::span<const ItemId> items) const;

  EncoderShape shape_;
  Tensor item_table_;
  Tensor positional_;
  Tensor w_in_;  // only when item_dim != hidden
  GatedAttentionStack stack_;
  Tensor w_out_;
};

}  // namespace sar::model
