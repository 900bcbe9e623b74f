#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pixcolor {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad = false;
  bool is_leaf = true;
  std::vector<std::shared_ptr<Node>> inputs;
  // Reads `self.grad` and accumulates into the grads of `inputs`.
  std::function<void(Node& self)> backward;
};

}  // namespace detail

/// Dense row-major tensor of doubles that records the operations producing it
/// so gradients can be propagated back to leaves with `requires_grad`.
///
/// Copies are shallow handles to the same storage; use `detach()` for a deep
/// copy without history.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0, bool requires_grad = false);

  static Tensor from_values(Shape shape, std::vector<double> values,
                            bool requires_grad = false);
  static Tensor scalar(double v) { return from_values({1}, {v}); }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t dim(std::size_t i) const { return node_->shape.at(i); }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t numel() const { return node_->value.size(); }

  std::span<double> data() { return node_->value; }
  std::span<const double> data() const { return node_->value; }
  double item() const;

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on);
  std::span<double> grad();
  std::span<const double> grad() const;
  void zero_grad();

  /// Reverse-mode sweep from this scalar. Leaf grads accumulate across calls;
  /// interior grads are recomputed each call.
  void backward() const;

  Tensor detach() const;

  const std::shared_ptr<detail::Node>& node() const { return node_; }
  explicit Tensor(std::shared_ptr<detail::Node> n) : node_(std::move(n)) {}

 private:
  std::shared_ptr<detail::Node> node_;
};

/// While alive, ops on this thread record no history (inference mode).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

  static bool active();

 private:
  bool previous_;
};

namespace detail {

using BackwardFn = std::function<void(Node& self)>;

/// Wraps a freshly computed value as the output of an op. History is only
/// recorded when at least one input requires a gradient.
Tensor make_result(Shape shape, std::vector<double> value,
                   std::vector<Tensor> inputs, BackwardFn backward);

/// Grad buffer of an input node, or nullptr if it does not take gradients.
inline double* grad_of(const Tensor& t) {
  return t.requires_grad() ? t.node()->grad.data() : nullptr;
}

}  // namespace detail

}  // namespace pixcolor
