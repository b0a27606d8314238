#include "sar/numcore/ops.hpp"

#include "sar/errors.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <string>

namespace sar::nc {

namespace {

using Impl = std::shared_ptr<TensorImpl>;
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

ConstMap view(const std::vector<double>& data, const Shape& shape) {
  return ConstMap(data.data(), static_cast<Eigen::Index>(shape.rows),
                  static_cast<Eigen::Index>(shape.cols));
}

MutMap view(std::vector<double>& data, const Shape& shape) {
  return MutMap(data.data(), static_cast<Eigen::Index>(shape.rows),
                static_cast<Eigen::Index>(shape.cols));
}

bool recording(std::initializer_list<const Tensor*> inputs) {
  if (active_tape() == nullptr) return false;
  return std::any_of(inputs.begin(), inputs.end(),
                     [](const Tensor* t) { return t->requires_grad(); });
}

// Gradient buffer of an input, or nullptr when it does not need one.
std::vector<double>* grad_of(const Impl& impl) {
  if (!impl->requires_grad) return nullptr;
  impl->ensure_grad();
  return &impl->grad;
}

Tensor make_output(const char* op, Shape shape, std::vector<double> data, bool record) {
  for (double v : data) {
    if (!std::isfinite(v)) throw NumericError(std::string("non-finite value produced by ") + op);
  }
  return Tensor::from(shape, std::move(data), record);
}

void push(const Tensor& output, Tape::BackwardFn fn) {
  active_tape()->record(output.handle(), std::move(fn));
}

void require_defined(const Tensor& t, const char* op) {
  if (!t.defined()) throw ContractError(std::string(op) + ": undefined tensor");
}

enum class Broadcast { kSame, kLeftScalar, kRightScalar };

Broadcast broadcast_kind(const Tensor& a, const Tensor& b, const char* op) {
  require_defined(a, op);
  require_defined(b, op);
  if (a.shape() == b.shape()) return Broadcast::kSame;
  if (a.size() == 1) return Broadcast::kLeftScalar;
  if (b.size() == 1) return Broadcast::kRightScalar;
  throw ShapeError(std::string(op) + ": incompatible shapes " + to_string(a.shape()) + " and " +
                   to_string(b.shape()));
}

// Shared driver for unary elementwise ops. `derivative(x, y)` is the local
// derivative given input x and output y.
template <typename Forward, typename Derivative>
Tensor unary(const char* op, const Tensor& a, Forward forward, Derivative derivative) {
  require_defined(a, op);
  const auto& x = a.handle()->data;
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = forward(x[i]);
  const bool record = recording({&a});
  Tensor result = make_output(op, a.shape(), std::move(out), record);
  if (record) {
    Impl ai = a.handle();
    Impl yi = result.handle();
    std::weak_ptr<TensorImpl> yw = yi;
    push(result, [ai, yw, derivative](const std::vector<double>& g) {
      auto* ga = grad_of(ai);
      if (ga == nullptr) return;
      const auto y = yw.lock();
      for (std::size_t i = 0; i < g.size(); ++i) {
        (*ga)[i] += g[i] * derivative(ai->data[i], y->data[i]);
      }
    });
  }
  return result;
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_defined(a, "matmul");
  require_defined(b, "matmul");
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions disagree " + to_string(a.shape()) + " · " +
                     to_string(b.shape()));
  }
  const Shape shape{a.rows(), b.cols()};
  std::vector<double> out(shape.size());
  view(out, shape).noalias() = view(a.handle()->data, a.shape()) * view(b.handle()->data, b.shape());
  const bool record = recording({&a, &b});
  Tensor result = make_output("matmul", shape, std::move(out), record);
  if (record) {
    Impl ai = a.handle();
    Impl bi = b.handle();
    push(result, [ai, bi, shape](const std::vector<double>& g) {
      const auto gm = view(g, shape);
      if (auto* ga = grad_of(ai)) {
        view(*ga, ai->shape).noalias() += gm * view(bi->data, bi->shape).transpose();
      }
      if (auto* gb = grad_of(bi)) {
        view(*gb, bi->shape).noalias() += view(ai->data, ai->shape).transpose() * gm;
      }
    });
  }
  return result;
}

Tensor matmul_transposed(const Tensor& a, const Tensor& b) {
  require_defined(a, "matmul_transposed");
  require_defined(b, "matmul_transposed");
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_transposed: inner dimensions disagree " + to_string(a.shape()) +
                     " · " + to_string(b.shape()) + "ᵀ");
  }
  const Shape shape{a.rows(), b.rows()};
  std::vector<double> out(shape.size());
  view(out, shape).noalias() =
      view(a.handle()->data, a.shape()) * view(b.handle()->data, b.shape()).transpose();
  const bool record = recording({&a, &b});
  Tensor result = make_output("matmul_transposed", shape, std::move(out), record);
  if (record) {
    Impl ai = a.handle();
    Impl bi = b.handle();
    push(result, [ai, bi, shape](const std::vector<double>& g) {
      const auto gm = view(g, shape);
      if (auto* ga = grad_of(ai)) {
        view(*ga, ai->shape).noalias() += gm * view(bi->data, bi->shape);
      }
      if (auto* gb = grad_of(bi)) {
        view(*gb, bi->shape).noalias() += gm.transpose() * view(ai->data, ai->shape);
      }
    });
  }
  return result;
}

Tensor transpose(const Tensor& a) {
  require_defined(a, "transpose");
  const Shape shape{a.cols(), a.rows()};
  std::vector<double> out(shape.size());
  view(out, shape) = view(a.handle()->data, a.shape()).transpose();
  const bool record = recording({&a});
  Tensor result = make_output("transpose", shape, std::move(out), record);
  if (record) {
    Impl ai = a.handle();
    push(result, [ai, shape](const std::vector<double>& g) {
      if (auto* ga = grad_of(ai)) view(*ga, ai->shape) += view(g, shape).transpose();
    });
  }
  return result;
}

namespace {

template <typename Combine, typename LeftGrad, typename RightGrad>
Tensor binary(const char* op, const Tensor& a, const Tensor& b, Combine combine,
              LeftGrad left_grad, RightGrad right_grad) {
  const Broadcast kind = broadcast_kind(a, b, op);
  const Shape shape = kind == Broadcast::kLeftScalar ? b.shape() : a.shape();
  const auto& x = a.handle()->data;
  const auto& y = b.handle()->data;
  const std::size_t n = shape.size();
  auto xi = [&](std::size_t i) { return kind == Broadcast::kLeftScalar ? x[0] : x[i]; };
  auto yi = [&](std::size_t i) { return kind == Broadcast::kRightScalar ? y[0] : y[i]; };
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = combine(xi(i), yi(i));
  const bool record = recording({&a, &b});
  Tensor result = make_output(op, shape, std::move(out), record);
  if (record) {
    Impl ai = a.handle();
    Impl bi = b.handle();
    push(result, [ai, bi, kind, left_grad, right_grad](const std::vector<double>& g) {
      const auto& xd = ai->data;
      const auto& yd = bi->data;
      auto xv = [&](std::size_t i) { return kind == Broadcast::kLeftScalar ? xd[0] : xd[i]; };
      auto yv = [&](std::size_t i) { return kind == Broadcast::kRightScalar ? yd[0] : yd[i]; };
      if (auto* ga = grad_of(ai)) {
        for (std::size_t i = 0; i < g.size(); ++i) {
          const std::size_t j = kind == Broadcast::kLeftScalar ? 0 : i;
          (*ga)[j] += g[i] * left_grad(xv(i), yv(i));
        }
      }
      if (auto* gb = grad_of(bi)) {
        for (std::size_t i = 0; i < g.size(); ++i) {
          const std::size_t j = kind == Broadcast::kRightScalar ? 0 : i;
          (*gb)[j] += g[i] * right_grad(xv(i), yv(i));
        }
      }
    });
  }
  return result;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary(
      "add", a, b, [](double x, double y) { return x + y; },
      [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary(
      "sub", a, b, [](double x, double y) { return x - y; },
      [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary(
      "mul", a, b, [](double x, double y) { return x * y; },
      [](double, double y) { return y; }, [](double x, double) { return x; });
}

Tensor neg(const Tensor& a) {
  return unary(
      "neg", a, [](double x) { return -x; }, [](double, double) { return -1.0; });
}

Tensor scale(const Tensor& a, double factor) {
  return unary(
      "scale", a, [factor](double x) { return factor * x; },
      [factor](double, double) { return factor; });
}

Tensor add_constant(const Tensor& a, double constant) {
  return unary(
      "add_constant", a, [constant](double x) { return x + constant; },
      [](double, double) { return 1.0; });
}

Tensor relu(const Tensor& a) {
  return unary(
      "relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor clamp(const Tensor& a, std::span<const double> lo, std::span<const double> hi) {
  require_defined(a, "clamp");
  if (lo.size() != a.size() || hi.size() != a.size()) {
    throw ShapeError("clamp: bounds do not match " + to_string(a.shape()));
  }
  const auto& x = a.handle()->data;
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::min(std::max(x[i], lo[i]), hi[i]);
  const bool record = recording({&a});
  Tensor result = make_output("clamp", a.shape(), std::move(out), record);
  if (record) {
    Impl ai = a.handle();
    std::vector<double> lower(lo.begin(), lo.end()), upper(hi.begin(), hi.end());
    push(result, [ai, lower, upper](const std::vector<double>& g) {
      auto* ga = grad_of(ai);
      if (ga == nullptr) return;
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (ai->data[i] > lower[i] && ai->data[i] < upper[i]) (*ga)[i] += g[i];
      }
    });
  }
  return result;
}

Tensor sigmoid(const Tensor& a) {
  return unary(
      "sigmoid", a,
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh(const Tensor& a) {
  return unary(
      "tanh", a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor log(const Tensor& a) {
  require_defined(a, "log");
  for (double v : a.values()) {
    if (!(v > 0.0)) throw DomainError("log of non-positive value " + std::to_string(v));
  }
  return unary(
      "log", a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor add_row(const Tensor& x, const Tensor& bias) {
  require_defined(x, "add_row");
  require_defined(bias, "add_row");
  if (bias.rows() != 1 || bias.cols() != x.cols()) {
    throw ShapeError("add_row: bias " + to_string(bias.shape()) + " for " + to_string(x.shape()));
  }
  const Shape shape = x.shape();
  std::vector<double> out(x.values().begin(), x.values().end());
  const auto& b = bias.handle()->data;
  for (std::size_t r = 0; r < shape.rows; ++r) {
    for (std::size_t c = 0; c < shape.cols; ++c) out[r * shape.cols + c] += b[c];
  }
  const bool record = recording({&x, &bias});
  Tensor result = make_output("add_row", shape, std::move(out), record);
  if (record) {
    Impl xi = x.handle();
    Impl bi = bias.handle();
    push(result, [xi, bi, shape](const std::vector<double>& g) {
      if (auto* gx = grad_of(xi)) {
        for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += g[i];
      }
      if (auto* gb = grad_of(bi)) {
        for (std::size_t r = 0; r < shape.rows; ++r) {
          for (std::size_t c = 0; c < shape.cols; ++c) (*gb)[c] += g[r * shape.cols + c];
        }
      }
    });
  }
  return result;
}

namespace {

// Softmax over the first `width(r)` columns of every row; the rest stay 0.
template <typename Width>
Tensor masked_softmax(const char* op, const Tensor& x, Width width) {
  require_defined(x, op);
  if (x.size() == 0) throw ShapeError(std::string(op) + ": empty input");
  const Shape shape = x.shape();
  const auto& in = x.handle()->data;
  std::vector<double> out(shape.size(), 0.0);
  for (std::size_t r = 0; r < shape.rows; ++r) {
    const double* row = in.data() + r * shape.cols;
    double* dst = out.data() + r * shape.cols;
    const std::size_t n = width(r);
    const double peak = *std::max_element(row, row + n);
    double total = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      dst[c] = std::exp(row[c] - peak);
      total += dst[c];
    }
    for (std::size_t c = 0; c < n; ++c) dst[c] /= total;
  }
  const bool record = recording({&x});
  Tensor result = make_output(op, shape, std::move(out), record);
  if (record) {
    Impl xi = x.handle();
    std::weak_ptr<TensorImpl> yw = result.handle();
    push(result, [xi, yw, shape](const std::vector<double>& g) {
      auto* gx = grad_of(xi);
      if (gx == nullptr) return;
      const auto y = yw.lock();
      for (std::size_t r = 0; r < shape.rows; ++r) {
        const std::size_t base = r * shape.cols;
        double dot = 0.0;
        for (std::size_t c = 0; c < shape.cols; ++c) dot += g[base + c] * y->data[base + c];
        for (std::size_t c = 0; c < shape.cols; ++c) {
          (*gx)[base + c] += y->data[base + c] * (g[base + c] - dot);
        }
      }
    });
  }
  return result;
}

}  // namespace

Tensor softmax(const Tensor& x) {
  return masked_softmax("softmax", x, [&](std::size_t) { return x.cols(); });
}

Tensor causal_softmax(const Tensor& scores) {
  if (scores.defined() && scores.rows() != scores.cols()) {
    throw ShapeError("causal_softmax: scores must be square, got " + to_string(scores.shape()));
  }
  return masked_softmax("causal_softmax", scores, [](std::size_t r) { return r + 1; });
}

Tensor sum(const Tensor& x) {
  require_defined(x, "sum");
  double total = 0.0;
  for (double v : x.values()) total += v;
  const bool record = recording({&x});
  Tensor result = make_output("sum", {1, 1}, {total}, record);
  if (record) {
    Impl xi = x.handle();
    push(result, [xi](const std::vector<double>& g) {
      if (auto* gx = grad_of(xi)) {
        for (double& v : *gx) v += g[0];
      }
    });
  }
  return result;
}

Tensor mean(const Tensor& x) {
  require_defined(x, "mean");
  if (x.size() == 0) throw ShapeError("mean: empty input");
  return scale(sum(x), 1.0 / static_cast<double>(x.size()));
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  require_defined(x, "layer_norm");
  const Shape shape = x.shape();
  if (gain.shape() != Shape{1, shape.cols} || bias.shape() != Shape{1, shape.cols}) {
    throw ShapeError("layer_norm: gain/bias must be 1x" + std::to_string(shape.cols));
  }
  const std::size_t n = shape.cols;
  const auto& in = x.handle()->data;
  const auto& gd = gain.handle()->data;
  const auto& bd = bias.handle()->data;
  std::vector<double> normalized(shape.size());
  std::vector<double> inv_std(shape.rows);
  std::vector<double> out(shape.size());
  for (std::size_t r = 0; r < shape.rows; ++r) {
    const double* row = in.data() + r * n;
    double mu = 0.0;
    for (std::size_t c = 0; c < n; ++c) mu += row[c];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t c = 0; c < n; ++c) var += (row[c] - mu) * (row[c] - mu);
    var /= static_cast<double>(n);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < n; ++c) {
      const double xhat = (row[c] - mu) * inv_std[r];
      normalized[r * n + c] = xhat;
      out[r * n + c] = xhat * gd[c] + bd[c];
    }
  }
  const bool record = recording({&x, &gain, &bias});
  Tensor result = make_output("layer_norm", shape, std::move(out), record);
  if (record) {
    Impl xi = x.handle();
    Impl gi = gain.handle();
    Impl bi = bias.handle();
    push(result, [xi, gi, bi, shape, normalized = std::move(normalized),
                  inv_std = std::move(inv_std)](const std::vector<double>& g) {
      const std::size_t n = shape.cols;
      if (auto* gg = grad_of(gi)) {
        for (std::size_t i = 0; i < g.size(); ++i) (*gg)[i % n] += g[i] * normalized[i];
      }
      if (auto* gb = grad_of(bi)) {
        for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i % n] += g[i];
      }
      auto* gx = grad_of(xi);
      if (gx == nullptr) return;
      const auto& gain_data = gi->data;
      for (std::size_t r = 0; r < shape.rows; ++r) {
        double sum_d = 0.0;
        double sum_dx = 0.0;
        for (std::size_t c = 0; c < n; ++c) {
          const double d = g[r * n + c] * gain_data[c];
          sum_d += d;
          sum_dx += d * normalized[r * n + c];
        }
        const double nn = static_cast<double>(n);
        for (std::size_t c = 0; c < n; ++c) {
          const double d = g[r * n + c] * gain_data[c];
          (*gx)[r * n + c] +=
              inv_std[r] / nn * (nn * d - sum_d - normalized[r * n + c] * sum_dx);
        }
      }
    });
  }
  return result;
}

Tensor concat_cols(const Tensor& left, const Tensor& right) {
  require_defined(left, "concat_cols");
  require_defined(right, "concat_cols");
  if (left.rows() != right.rows()) {
    throw ShapeError("concat_cols: row counts differ " + to_string(left.shape()) + " and " +
                     to_string(right.shape()));
  }
  const std::size_t lc = left.cols();
  const std::size_t rc = right.cols();
  const Shape shape{left.rows(), lc + rc};
  std::vector<double> out(shape.size());
  for (std::size_t r = 0; r < shape.rows; ++r) {
    std::copy_n(left.values().begin() + r * lc, lc, out.begin() + r * shape.cols);
    std::copy_n(right.values().begin() + r * rc, rc, out.begin() + r * shape.cols + lc);
  }
  const bool record = recording({&left, &right});
  Tensor result = make_output("concat_cols", shape, std::move(out), record);
  if (record) {
    Impl li = left.handle();
    Impl ri = right.handle();
    push(result, [li, ri, shape, lc, rc](const std::vector<double>& g) {
      auto* gl = grad_of(li);
      auto* gr = grad_of(ri);
      for (std::size_t r = 0; r < shape.rows; ++r) {
        const double* src = g.data() + r * shape.cols;
        if (gl) {
          for (std::size_t c = 0; c < lc; ++c) (*gl)[r * lc + c] += src[c];
        }
        if (gr) {
          for (std::size_t c = 0; c < rc; ++c) (*gr)[r * rc + c] += src[lc + c];
        }
      }
    });
  }
  return result;
}

Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t count) {
  require_defined(x, "slice_rows");
  if (begin + count > x.rows() || count == 0) {
    throw ShapeError("slice_rows: rows [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") of " + to_string(x.shape()));
  }
  const std::size_t cols = x.cols();
  const Shape shape{count, cols};
  std::vector<double> out(x.values().begin() + begin * cols,
                          x.values().begin() + (begin + count) * cols);
  const bool record = recording({&x});
  Tensor result = make_output("slice_rows", shape, std::move(out), record);
  if (record) {
    Impl xi = x.handle();
    push(result, [xi, begin, cols](const std::vector<double>& g) {
      if (auto* gx = grad_of(xi)) {
        for (std::size_t i = 0; i < g.size(); ++i) (*gx)[begin * cols + i] += g[i];
      }
    });
  }
  return result;
}

Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t count) {
  require_defined(x, "slice_cols");
  if (begin + count > x.cols() || count == 0) {
    throw ShapeError("slice_cols: cols [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") of " + to_string(x.shape()));
  }
  const std::size_t cols = x.cols();
  const Shape shape{x.rows(), count};
  std::vector<double> out(shape.size());
  for (std::size_t r = 0; r < shape.rows; ++r) {
    std::copy_n(x.values().begin() + r * cols + begin, count, out.begin() + r * count);
  }
  const bool record = recording({&x});
  Tensor result = make_output("slice_cols", shape, std::move(out), record);
  if (record) {
    Impl xi = x.handle();
    push(result, [xi, begin, count, cols](const std::vector<double>& g) {
      auto* gx = grad_of(xi);
      if (gx == nullptr) return;
      const std::size_t rows = g.size() / count;
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < count; ++c) (*gx)[r * cols + begin + c] += g[r * count + c];
      }
    });
  }
  return result;
}

Tensor gather_rows(const Tensor& table, std::span<const std::size_t> ids) {
  require_defined(table, "gather_rows");
  if (ids.empty()) throw ShapeError("gather_rows: no ids");
  const std::size_t cols = table.cols();
  for (std::size_t id : ids) {
    if (id >= table.rows()) {
      throw ShapeError("gather_rows: row " + std::to_string(id) + " outside " +
                       to_string(table.shape()));
    }
  }
  const Shape shape{ids.size(), cols};
  std::vector<double> out(shape.size());
  for (std::size_t r = 0; r < ids.size(); ++r) {
    std::copy_n(table.values().begin() + ids[r] * cols, cols, out.begin() + r * cols);
  }
  const bool record = recording({&table});
  Tensor result = make_output("gather_rows", shape, std::move(out), record);
  if (record) {
    Impl ti = table.handle();
    std::vector<std::size_t> rows(ids.begin(), ids.end());
    push(result, [ti, rows = std::move(rows), cols](const std::vector<double>& g) {
      if (auto* gt = grad_of(ti)) {
        for (std::size_t r = 0; r < rows.size(); ++r) {
          for (std::size_t c = 0; c < cols; ++c) (*gt)[rows[r] * cols + c] += g[r * cols + c];
        }
      }
    });
  }
  return result;
}

Tensor pick(const Tensor& x, std::size_t r, std::size_t c) {
  require_defined(x, "pick");
  if (r >= x.rows() || c >= x.cols()) {
    throw ShapeError("pick: (" + std::to_string(r) + ", " + std::to_string(c) + ") outside " +
                     to_string(x.shape()));
  }
  const std::size_t index = r * x.cols() + c;
  const bool record = recording({&x});
  Tensor result = make_output("pick", {1, 1}, {x.values()[index]}, record);
  if (record) {
    Impl xi = x.handle();
    push(result, [xi, index](const std::vector<double>& g) {
      if (auto* gx = grad_of(xi)) (*gx)[index] += g[0];
    });
  }
  return result;
}

}  // namespace sar::nc
