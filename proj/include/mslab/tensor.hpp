#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace mslab {

class Tape;

namespace detail {

struct TensorNode {
  std::vector<int> shape;
  std::vector<double> value;
  bool requires_grad = false;
  std::vector<double> grad;  // empty until a gradient reaches this node

  // Set only on recorded op outputs.
  std::vector<std::shared_ptr<TensorNode>> parents;
  std::function<void(TensorNode&)> backward_fn;
  std::uint64_t tape_generation = 0;

  void ensure_grad() {
    if (grad.empty()) grad.assign(value.size(), 0.0);
  }
};

}  // namespace detail

int numel(const std::vector<int>& shape);
std::string shape_str(const std::vector<int>& shape);

// Value-semantics handle over shared storage. Flat row-major float64.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
  static Tensor from(std::vector<int> shape, std::vector<double> values,
                     bool requires_grad = false);
  static Tensor scalar(double v);

  bool defined() const { return node_ != nullptr; }
  const std::vector<int>& shape() const { return node().shape; }
  int size() const { return static_cast<int>(node().value.size()); }
  const std::vector<double>& values() const { return node().value; }
  // In-place mutation is allowed on leaves only (optimizer updates); mutating
  // a recorded op output would desynchronize the tape.
  std::vector<double>& values_mut();

  bool requires_grad() const { return node().requires_grad; }
  bool has_grad() const { return !node().grad.empty(); }
  const std::vector<double>& grad() const;
  void zero_grad();

  double item() const;

 private:
  friend class Tape;
  friend struct OpAccess;
  explicit Tensor(std::shared_ptr<detail::TensorNode> n) : node_(std::move(n)) {}
  detail::TensorNode& node() const;
  std::shared_ptr<detail::TensorNode> node_;
};

// Reverse-mode tape, one per thread. Ops append their output nodes in
// creation order, which is a topological order by construction; backward
// seeds the loss with 1 and sweeps that list once in reverse.
class Tape {
 public:
  static Tape& active();  // thread-local instance

  // Populates grad on every requires_grad tensor reachable from loss, then
  // consumes the recording.
  void backward(const Tensor& loss);
  void reset();

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t last_backward_invocations() const { return last_invocations_; }
  std::uint64_t generation() const { return generation_; }

  void record(const std::shared_ptr<detail::TensorNode>& n);

 private:
  std::vector<std::shared_ptr<detail::TensorNode>> nodes_;
  std::uint64_t generation_ = 1;
  std::size_t last_invocations_ = 0;
};

// Disables gradient recording while alive (evaluation mode).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_recording_enabled();

}  // namespace mslab
