#include "sar/numcore/tensor.hpp"

#include "sar/errors.hpp"

#include <algorithm>

namespace sar::nc {

std::string to_string(const Shape& shape) {
  return "[" + std::to_string(shape.rows) + "x" + std::to_string(shape.cols) + "]";
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return filled(shape, 0.0, requires_grad);
}

Tensor Tensor::filled(Shape shape, double value, bool requires_grad) {
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = shape;
  impl->data.assign(shape.size(), value);
  impl->requires_grad = requires_grad;
  return Tensor(std::move(impl));
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  if (values.size() != shape.size()) {
    throw ShapeError("tensor " + to_string(shape) + " given " + std::to_string(values.size()) +
                     " values");
  }
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = shape;
  impl->data = std::move(values);
  impl->requires_grad = requires_grad;
  return Tensor(std::move(impl));
}

Tensor Tensor::row(std::vector<double> values, bool requires_grad) {
  const Shape shape{1, values.size()};
  return from(shape, std::move(values), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from({1, 1}, {value}, requires_grad);
}

double Tensor::item() const {
  if (impl_->shape.size() != 1) {
    throw ShapeError("item() on non-scalar tensor " + to_string(impl_->shape));
  }
  return impl_->data[0];
}

Tensor Tensor::detach() const {
  return from(impl_->shape, impl_->data, false);
}

Tensor Tensor::clone() const {
  return from(impl_->shape, impl_->data, impl_->requires_grad);
}

void Tape::record(std::shared_ptr<TensorImpl> output, BackwardFn backward) {
  if (consumed_) throw ContractError("recording onto a tape that already ran backward");
  nodes_.push_back(Node{std::move(output), std::move(backward)});
}

void Tape::backward(const Tensor& root) {
  if (consumed_) throw ContractError("backward called twice on the same tape");
  if (!root.defined() || root.size() != 1) {
    throw ContractError("backward root must be a scalar");
  }
  const auto it = std::find_if(nodes_.rbegin(), nodes_.rend(), [&](const Node& node) {
    return node.output == root.handle();
  });
  if (it == nodes_.rend()) throw ContractError("backward root was not produced on this tape");
  consumed_ = true;

  root.handle()->ensure_grad();
  root.handle()->grad[0] += 1.0;
  // Nodes after the root cannot influence it.
  for (auto node = it; node != nodes_.rend(); ++node) {
    if (node->output->grad.empty()) continue;
    node->backward(node->output->grad);
  }
}

namespace {
thread_local Tape* current_tape = nullptr;
}  // namespace

Tape* active_tape() { return current_tape; }

TapeScope::TapeScope(Tape* tape) : previous_(current_tape) { current_tape = tape; }

TapeScope::~TapeScope() { current_tape = previous_; }

void backward(const Tensor& root) {
  Tape* tape = active_tape();
  if (tape == nullptr) throw ContractError("backward without an active tape");
  tape->backward(root);
}

}  // namespace sar::nc
