#pragma once

#include "sar/numcore/tensor.hpp"

#include <cstdint>
#include <vector>

namespace sar::nc {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction. Moment buffers are owned per parameter and
// persist across steps.
class Adam {
 public:
  Adam() = default;
  Adam(std::vector<Tensor> params, AdamOptions options);

  // Applies one update from the parameters' accumulated gradients.
  // Throws ContractError if any parameter has no gradient buffer.
  void step();
  void zero_grad();

  const std::vector<Tensor>& params() const { return params_; }
  std::int64_t steps() const { return t_; }
  AdamOptions& options() { return options_; }

 private:
  std::vector<Tensor> params_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  AdamOptions options_;
  std::int64_t t_ = 0;
};

// Single update of `param` at step `t` (1-based) against explicit moment buffers.
void adam_update(Tensor& param, std::vector<double>& m, std::vector<double>& v,
                 const AdamOptions& options, std::int64_t t);

}  // namespace sar::nc
