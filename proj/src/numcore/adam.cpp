#include "sar/numcore/adam.hpp"

#include "sar/errors.hpp"

#include <cmath>

namespace sar::nc {

Adam::Adam(std::vector<Tensor> params, AdamOptions options)
    : params_(std::move(params)), options_(options) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const Tensor& p : params_) {
    m_.emplace_back(p.size(), 0.0);
    v_.emplace_back(p.size(), 0.0);
  }
}

void Adam::step() {
  for (const Tensor& p : params_) {
    if (!p.has_grad()) throw ContractError("adam step on a parameter without a gradient");
  }
  ++t_;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    adam_update(params_[i], m_[i], v_[i], options_, t_);
  }
}

void Adam::zero_grad() {
  for (Tensor& p : params_) p.zero_grad();
}

void adam_update(Tensor& param, std::vector<double>& m, std::vector<double>& v,
                 const AdamOptions& options, std::int64_t t) {
  if (t < 1) throw ContractError("adam step count must be >= 1");
  if (!param.has_grad()) throw ContractError("adam step on a parameter without a gradient");
  const auto g = param.grad();
  auto w = param.mutable_values();
  const double bias1 = 1.0 - std::pow(options.beta1, static_cast<double>(t));
  const double bias2 = 1.0 - std::pow(options.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < w.size(); ++i) {
    m[i] = options.beta1 * m[i] + (1.0 - options.beta1) * g[i];
    v[i] = options.beta2 * v[i] + (1.0 - options.beta2) * g[i] * g[i];
    const double m_hat = m[i] / bias1;
    const double v_hat = v[i] / bias2;
    w[i] -= options.lr * m_hat / (std::sqrt(v_hat) + options.eps);
  }
}

}  // namespace sar::nc
