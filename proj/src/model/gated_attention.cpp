#include "sar/model/gated_attention.hpp"

#include "sar/errors.hpp"
#include "sar/numcore/ops.hpp"

#include <cmath>

namespace sar::model {

namespace {

Tensor param(Tensor t) { return t.set_requires_grad(true); }

GateParams make_gate(std::size_t width, double gate_bias, nc::Rng& rng) {
  GateParams gate;
  gate.w_update = glorot(width, width, rng);
  gate.b_update = param(Tensor::filled({1, width}, gate_bias));
  gate.w_reset = glorot(width, width, rng);
  gate.b_reset = param(Tensor::zeros({1, width}));
  return gate;
}

void append_gate(const GateParams& gate, const std::string& prefix, std::vector<NamedTensor>& out) {
  out.push_back({prefix + ".w_update", gate.w_update});
  out.push_back({prefix + ".b_update", gate.b_update});
  out.push_back({prefix + ".w_reset", gate.w_reset});
  out.push_back({prefix + ".b_reset", gate.b_reset});
}

}  // namespace

Tensor glorot(std::size_t rows, std::size_t cols, nc::Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::vector<double> values(rows * cols);
  for (double& v : values) v = rng.uniform(-limit, limit);
  return Tensor::from({rows, cols}, std::move(values), true);
}

BlockParams make_block(const BlockShape& shape, double gate_bias, nc::Rng& rng) {
  const std::size_t d = shape.width;
  BlockParams b;
  b.ln1_gain = param(Tensor::filled({1, d}, 1.0));
  b.ln1_bias = param(Tensor::zeros({1, d}));
  b.w_query = glorot(d, d, rng);
  b.w_key = glorot(d, d, rng);
  b.w_value = glorot(d, d, rng);
  b.attention_gate = make_gate(d, gate_bias, rng);
  b.ln2_gain = param(Tensor::filled({1, d}, 1.0));
  b.ln2_bias = param(Tensor::zeros({1, d}));
  b.w_ff1 = glorot(d, shape.ff_width, rng);
  b.b_ff1 = param(Tensor::zeros({1, shape.ff_width}));
  b.w_ff2 = glorot(shape.ff_width, d, rng);
  b.b_ff2 = param(Tensor::zeros({1, d}));
  b.feedforward_gate = make_gate(d, gate_bias, rng);
  return b;
}

void append_parameters(const BlockParams& b, const std::string& prefix,
                       std::vector<NamedTensor>& out) {
  out.push_back({prefix + ".ln1_gain", b.ln1_gain});
  out.push_back({prefix + ".ln1_bias", b.ln1_bias});
  out.push_back({prefix + ".w_query", b.w_query});
  out.push_back({prefix + ".w_key", b.w_key});
  out.push_back({prefix + ".w_value", b.w_value});
  append_gate(b.attention_gate, prefix + ".attention_gate", out);
  out.push_back({prefix + ".ln2_gain", b.ln2_gain});
  out.push_back({prefix + ".ln2_bias", b.ln2_bias});
  out.push_back({prefix + ".w_ff1", b.w_ff1});
  out.push_back({prefix + ".b_ff1", b.b_ff1});
  out.push_back({prefix + ".w_ff2", b.w_ff2});
  out.push_back({prefix + ".b_ff2", b.b_ff2});
  append_gate(b.feedforward_gate, prefix + ".feedforward_gate", out);
}

std::size_t block_parameter_count(const BlockShape& shape) {
  const std::size_t d = shape.width;
  const std::size_t f = shape.ff_width;
  const std::size_t layer_norms = 2 * 2 * d;
  const std::size_t attention = 3 * d * d;
  const std::size_t gates = 2 * (2 * d * d + 2 * d);
  const std::size_t feedforward = d * f + f + f * d + d;
  return layer_norms + attention + gates + feedforward;
}

Tensor apply_gate(const GateParams& gate, const Tensor& residual, const Tensor& update) {
  const Tensor z = nc::sigmoid(nc::add_row(nc::matmul(update, gate.w_update), gate.b_update));
  const Tensor r = nc::sigmoid(nc::add_row(nc::matmul(update, gate.w_reset), gate.b_reset));
  const Tensor candidate = nc::tanh(nc::add(update, nc::mul(r, residual)));
  // x + z ⊙ (c − x) is z ⊙ c + (1 − z) ⊙ x and returns x exactly when z = 0.
  return nc::add(residual, nc::mul(z, nc::sub(candidate, residual)));
}

Tensor gated_attention_block(const BlockParams& b, const Tensor& x, bool last_only) {
  const std::size_t t = x.rows();
  if (t == 0) throw ShapeError("gated_attention_block: empty sequence");
  if (x.cols() != b.w_query.rows()) {
    throw ShapeError("gated_attention_block: input width " + std::to_string(x.cols()) +
                     " but block width " + std::to_string(b.w_query.rows()));
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(b.w_query.cols()));

  const Tensor normed = nc::layer_norm(x, b.ln1_gain, b.ln1_bias);
  const Tensor keys = nc::matmul(normed, b.w_key);
  const Tensor values = nc::matmul(normed, b.w_value);
  Tensor residual;
  Tensor attended;
  if (last_only) {
    // The last position attends to every position, so no mask is needed.
    const Tensor query = nc::matmul(nc::slice_rows(normed, t - 1, 1), b.w_query);
    const Tensor weights = nc::softmax(nc::scale(nc::matmul_transposed(query, keys), scale));
    attended = nc::matmul(weights, values);
    residual = nc::slice_rows(x, t - 1, 1);
  } else {
    const Tensor queries = nc::matmul(normed, b.w_query);
    const Tensor weights =
        nc::causal_softmax(nc::scale(nc::matmul_transposed(queries, keys), scale));
    attended = nc::matmul(weights, values);
    residual = x;
  }
  const Tensor after_attention = apply_gate(b.attention_gate, residual, attended);

  const Tensor normed2 = nc::layer_norm(after_attention, b.ln2_gain, b.ln2_bias);
  const Tensor hidden = nc::relu(nc::add_row(nc::matmul(normed2, b.w_ff1), b.b_ff1));
  const Tensor ff = nc::add_row(nc::matmul(hidden, b.w_ff2), b.b_ff2);
  return apply_gate(b.feedforward_gate, after_attention, ff);
}

GatedAttentionStack::GatedAttentionStack(BlockShape shape, std::size_t blocks, double gate_bias,
                                         nc::Rng& rng)
    : shape_(shape) {
  if (blocks == 0) throw ConfigError("attention stack needs at least one block");
  for (std::size_t i = 0; i < blocks; ++i) blocks_.push_back(make_block(shape, gate_bias, rng));
  final_gain_ = param(Tensor::filled({1, shape.width}, 1.0));
  final_bias_ = param(Tensor::zeros({1, shape.width}));
}

Tensor GatedAttentionStack::forward(const Tensor& x) const {
  Tensor h = x;
  for (const auto& block : blocks_) h = gated_attention_block(block, h, false);
  return nc::layer_norm(h, final_gain_, final_bias_);
}

Tensor GatedAttentionStack::forward_last(const Tensor& x) const {
  Tensor h = x;
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    h = gated_attention_block(blocks_[i], h, i + 1 == blocks_.size());
  }
  return nc::layer_norm(h, final_gain_, final_bias_);
}

void GatedAttentionStack::append_parameters(const std::string& prefix,
                                            std::vector<NamedTensor>& out) const {
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    model::append_parameters(blocks_[i], prefix + ".block" + std::to_string(i), out);
  }
  out.push_back({prefix + ".final_gain", final_gain_});
  out.push_back({prefix + ".final_bias", final_bias_});
}

std::size_t GatedAttentionStack::parameter_count(const BlockShape& shape, std::size_t blocks) {
  return blocks * block_parameter_count(shape) + 2 * shape.width;
}

}  // namespace sar::model
