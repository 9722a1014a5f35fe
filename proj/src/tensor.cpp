#include "mslab/tensor.hpp"

#include <stdexcept>

namespace mslab {

namespace {
thread_local bool g_recording = true;
}

int numel(const std::vector<int>& shape) {
  int n = 1;
  for (int d : shape) {
    if (d <= 0) throw std::invalid_argument("shape dims must be positive, got " + shape_str(shape));
    n *= d;
  }
  return n;
}

std::string shape_str(const std::vector<int>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

detail::TensorNode& Tensor::node() const {
  if (!node_) throw std::logic_error("use of undefined Tensor");
  return *node_;
}

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
  const int n = numel(shape);
  auto node = std::make_shared<detail::TensorNode>();
  node->shape = std::move(shape);
  node->value.assign(n, 0.0);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::from(std::vector<int> shape, std::vector<double> values,
                    bool requires_grad) {
  const int n = numel(shape);
  if (n != static_cast<int>(values.size()))
    throw std::invalid_argument("Tensor::from: " + std::to_string(values.size()) +
                                " values for shape " + shape_str(shape));
  auto node = std::make_shared<detail::TensorNode>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(double v) { return from({1}, {v}); }

std::vector<double>& Tensor::values_mut() {
  if (node().backward_fn)
    throw std::logic_error("cannot mutate values of a recorded op output");
  return node().value;
}

const std::vector<double>& Tensor::grad() const {
  if (node().grad.empty())
    throw std::logic_error("tensor has no gradient (backward not run, or not reached)");
  return node().grad;
}

void Tensor::zero_grad() { node().grad.clear(); }

double Tensor::item() const {
  if (size() != 1)
    throw std::invalid_argument("item() on non-scalar tensor of shape " +
                                shape_str(shape()));
  return values()[0];
}

Tape& Tape::active() {
  thread_local Tape tape;
  return tape;
}

void Tape::record(const std::shared_ptr<detail::TensorNode>& n) {
  n->tape_generation = generation_;
  nodes_.push_back(n);
}

void Tape::backward(const Tensor& loss) {
  if (loss.size() != 1)
    throw std::domain_error("backward: loss must be scalar, got shape " +
                            shape_str(loss.shape()));
  auto& ln = *loss.node_;
  if (!ln.backward_fn || ln.tape_generation != generation_)
    throw std::domain_error("backward: loss is not recorded on the active tape");
  ln.ensure_grad();
  ln.grad[0] += 1.0;

  last_invocations_ = 0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    detail::TensorNode& n = **it;
    if (n.grad.empty()) continue;  // no gradient reached this node
    n.backward_fn(n);
    ++last_invocations_;
  }
  // Recording is consumed; leaf gradients survive on their tensors.
  nodes_.clear();
  ++generation_;
}

void Tape::reset() {
  nodes_.clear();
  ++generation_;
}

NoGradGuard::NoGradGuard() : previous_(g_recording) { g_recording = false; }
NoGradGuard::~NoGradGuard() { g_recording = previous_; }

bool grad_recording_enabled() { return g_recording; }

}  // namespace mslab
