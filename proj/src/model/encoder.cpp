#include "sar/model/encoder.hpp"

#include "sar/errors.hpp"
#include "sar/numcore/ops.hpp"

#include <numeric>

namespace sar::model {

Tensor embedding_init(std::size_t rows, std::size_t cols, nc::Rng& rng) {
  std::vector<double> values(rows * cols);
  for (double& v : values) v = rng.uniform(-0.05, 0.05);
  return Tensor::from({rows, cols}, std::move(values), true);
}

EmbeddingTable EmbeddingTable::create(std::size_t num_items, std::size_t num_users,
                                      std::size_t dim, std::size_t max_length, nc::Rng& rng) {
  EmbeddingTable table;
  table.item = embedding_init(num_items, dim, rng);
  table.user = embedding_init(num_users, dim, rng);
  table.positional = embedding_init(max_length, dim, rng);
  return table;
}

StateEncoder::StateEncoder(const EncoderShape& shape, Tensor item_table, Tensor positional,
                           nc::Rng& rng)
    : shape_(shape), item_table_(std::move(item_table)), positional_(std::move(positional)) {
  if (item_table_.cols() != shape.item_dim || positional_.cols() != shape.item_dim ||
      positional_.rows() != shape.max_length) {
    throw ShapeError("state encoder: embedding tables do not match the configured dimensions");
  }
  if (shape.item_dim != shape.hidden) w_in_ = glorot(shape.item_dim, shape.hidden, rng);
  stack_ = GatedAttentionStack({shape.hidden, shape.ff_width}, shape.blocks, shape.gate_bias, rng);
  w_out_ = glorot(shape.hidden, shape.state_dim, rng);
}

Tensor StateEncoder::embed_sequence(std::span<const ItemId> items) const {
  if (items.empty()) throw ContractError("embed_sequence: empty item list");
  if (items.size() > shape_.max_length) {
    throw CapacityError("sequence of length " + std::to_string(items.size()) +
                        " exceeds max_length " + std::to_string(shape_.max_length));
  }
  const std::vector<std::size_t> ids(items.begin(), items.end());
  return nc::add(nc::gather_rows(item_table_, ids), nc::slice_rows(positional_, 0, items.size()));
}

Tensor StateEncoder::hidden_states(std::span<const ItemId> items) const {
  Tensor x = embed_sequence(items);
  if (w_in_.defined()) x = nc::matmul(x, w_in_);
  return stack_.forward(x);
}

Tensor StateEncoder::encode_all(std::span<const ItemId> items) const {
  return nc::matmul(hidden_states(items), w_out_);
}

Tensor StateEncoder::encode(std::span<const ItemId> items) const {
  if (items.empty()) throw ContractError("state_encode: empty item list");
  Tensor x = embed_sequence(items);
  if (w_in_.defined()) x = nc::matmul(x, w_in_);
  return nc::matmul(stack_.forward_last(x), w_out_);
}

void StateEncoder::append_parameters(std::vector<NamedTensor>& out, bool include_items) const {
  if (include_items) out.push_back({"encoder.item", item_table_});
  out.push_back({"encoder.positional", positional_});
  if (w_in_.defined()) out.push_back({"encoder.w_in", w_in_});
  stack_.append_parameters("encoder.stack", out);
  out.push_back({"encoder.w_out", w_out_});
}

std::size_t StateEncoder::parameter_count(const EncoderShape& shape, bool include_items,
                                          std::size_t num_items) {
  std::size_t count = shape.max_length * shape.item_dim;
  if (include_items) count += num_items * shape.item_dim;
  if (shape.item_dim != shape.hidden) count += shape.item_dim * shape.hidden;
  count += GatedAttentionStack::parameter_count({shape.hidden, shape.ff_width}, shape.blocks);
  count += shape.hidden * shape.state_dim;
  return count;
}

}  // namespace sar::model
