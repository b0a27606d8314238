#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace sar::nc {

// Every tensor is a row-major matrix; vectors are 1×n rows and scalars 1×1.
struct Shape {
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t size() const { return rows * cols; }
  bool operator==(const Shape&) const = default;
};

std::string to_string(const Shape& shape);

struct TensorImpl {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until a gradient is accumulated
  bool requires_grad = false;

  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
  }
};

// Shared handle to tensor storage. Copies alias the same storage, the way
// parameters are referenced from several places in a model.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor filled(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor row(std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  std::size_t rows() const { return impl_->shape.rows; }
  std::size_t cols() const { return impl_->shape.cols; }
  std::size_t size() const { return impl_->data.size(); }

  std::span<const double> values() const { return impl_->data; }
  // Direct writes are reserved for initialization and optimizer updates.
  std::span<double> mutable_values() { return impl_->data; }
  double operator()(std::size_t r, std::size_t c) const {
    return impl_->data[r * impl_->shape.cols + c];
  }
  double item() const;

  bool requires_grad() const { return impl_->requires_grad; }
  Tensor& set_requires_grad(bool value) {
    impl_->requires_grad = value;
    return *this;
  }

  bool has_grad() const { return !impl_->grad.empty(); }
  std::span<const double> grad() const { return impl_->grad; }
  std::span<double> mutable_grad() {
    impl_->ensure_grad();
    return impl_->grad;
  }
  void zero_grad() { impl_->grad.assign(impl_->data.size(), 0.0); }
  void clear_grad() { impl_->grad.clear(); }

  // Value copy cut off from any tape.
  Tensor detach() const;
  // Deep copy preserving requires_grad, without gradient.
  Tensor clone() const;

  const std::shared_ptr<TensorImpl>& handle() const { return impl_; }
  bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }

 private:
  std::shared_ptr<TensorImpl> impl_;
};

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

// Define-by-run record of differentiable operations. Nodes are appended in
// creation order, so inputs always precede the node that consumes them.
class Tape {
 public:
  using BackwardFn = std::function<void(const std::vector<double>& output_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  void record(std::shared_ptr<TensorImpl> output, BackwardFn backward);

  // Seeds d(root)/d(root) = 1 and runs every node in reverse order. A tape
  // is single use; calling backward twice throws ContractError.
  void backward(const Tensor& root);

  std::size_t size() const { return nodes_.size(); }
  bool consumed() const { return consumed_; }

 private:
  struct Node {
    std::shared_ptr<TensorImpl> output;
    BackwardFn backward;
  };

  std::vector<Node> nodes_;
  bool consumed_ = false;
};

// Tape that ops on this thread record into, or nullptr for plain evaluation.
Tape* active_tape();

// Installs a tape as the active one for the current thread for its lifetime.
// Passing nullptr suspends recording.
class TapeScope {
 public:
  explicit TapeScope(Tape* tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

// Backward on the thread's active tape.
void backward(const Tensor& root);

}  // namespace sar::nc
