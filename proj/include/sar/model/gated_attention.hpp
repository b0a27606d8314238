#pragma once

#include "sar/numcore/rng.hpp"
#include "sar/numcore/tensor.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace sar::model {

using nc::NamedTensor;
using nc::Tensor;

// GRU-style gate replacing a residual connection:
//   z = σ(y·W_update + b_update), r = σ(y·W_reset + b_reset)
//   c = tanh(y + r ⊙ x)
//   out = z ⊙ c + (1 − z) ⊙ x
// where x is the residual stream and y the sublayer output. With z → 0 the
// gate passes the residual stream through unchanged.
struct GateParams {
  Tensor w_update, b_update;
  Tensor w_reset, b_reset;
};

struct BlockParams {
  Tensor ln1_gain, ln1_bias;
  Tensor w_query, w_key, w_value;
  GateParams attention_gate;
  Tensor ln2_gain, ln2_bias;
  Tensor w_ff1, b_ff1, w_ff2, b_ff2;
  GateParams feedforward_gate;
};

struct BlockShape {
  std::size_t width = 100;
  std::size_t ff_width = 200;
};

BlockParams make_block(const BlockShape& shape, double gate_bias, nc::Rng& rng);
void append_parameters(const BlockParams& block, const std::string& prefix,
                       std::vector<NamedTensor>& out);
std::size_t block_parameter_count(const BlockShape& shape);

Tensor apply_gate(const GateParams& gate, const Tensor& residual, const Tensor& update);

// One pre-layer-norm block: causal single-head self-attention scaled by
// 1/√width, gated; then a ReLU feed-forward, gated. Input and output are
// [t×width]. With `last_only` only the final position's row is produced
// ([1×width]); it equals the last row of the full output.
Tensor gated_attention_block(const BlockParams& block, const Tensor& x, bool last_only = false);

// A stack of blocks followed by a final layer norm.
class GatedAttentionStack {
 public:
  GatedAttentionStack() = default;
  GatedAttentionStack(BlockShape shape, std::size_t blocks, double gate_bias, nc::Rng& rng);

  Tensor forward(const Tensor& x) const;
  // Final-position output only; earlier blocks still run over every row.
  Tensor forward_last(const Tensor& x) const;

  void append_parameters(const std::string& prefix, std::vector<NamedTensor>& out) const;
  static std::size_t parameter_count(const BlockShape& shape, std::size_t blocks);

  const BlockShape& shape() const { return shape_; }
  std::vector<BlockParams>& blocks() { return blocks_; }
  const std::vector<BlockParams>& blocks() const { return blocks_; }

 private:
  BlockShape shape_;
  std::vector<BlockParams> blocks_;
  Tensor final_gain_, final_bias_;
};

// Uniform(−√(6/(fan_in+fan_out)), +√(6/(fan_in+fan_out))).
Tensor glorot(std::size_t rows, std::size_t cols, nc::Rng& rng);

}  // namespace sar::model
