#pragma once

#include "sar/numcore/tensor.hpp"

#include <cstddef>
#include <span>

// Differentiable primitives. Each op records itself on the active tape when
// at least one input requires a gradient; otherwise it only computes values.
// Every forward result is checked for NaN/Inf (NumericError).
namespace sar::nc {

// [m×k]·[k×n]
Tensor matmul(const Tensor& a, const Tensor& b);
// [m×k]·[n×k]ᵀ, avoids materializing the transpose.
Tensor matmul_transposed(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

// Elementwise binary ops: identical shapes, or either side a 1×1 scalar.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);

Tensor neg(const Tensor& a);
Tensor scale(const Tensor& a, double factor);
Tensor add_constant(const Tensor& a, double constant);
Tensor relu(const Tensor& a);
// Elementwise min(max(a, lo), hi); gradient passes only strictly inside.
Tensor clamp(const Tensor& a, std::span<const double> lo, std::span<const double> hi);
Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);
// Throws DomainError on any non-positive entry.
Tensor log(const Tensor& a);

// x[m×n] + b[1×n] for every row.
Tensor add_row(const Tensor& x, const Tensor& bias);

// Row-wise softmax with max subtraction. A 1×n input is the vector case.
Tensor softmax(const Tensor& x);
// Square [t×t] scores; row i is normalized over columns 0..i, later columns are 0.
Tensor causal_softmax(const Tensor& scores);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps = 1e-5);

Tensor concat_cols(const Tensor& left, const Tensor& right);
Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t count);
Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t count);
// Rows table[ids[0]], table[ids[1]], ... ; backward scatter-adds.
Tensor gather_rows(const Tensor& table, std::span<const std::size_t> ids);
// Single element as a 1×1 tensor.
Tensor pick(const Tensor& x, std::size_t r, std::size_t c);

}  // namespace sar::nc
