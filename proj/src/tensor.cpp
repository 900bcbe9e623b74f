#include "pixcolor/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>

namespace pixcolor {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, double fill, bool requires_grad)
    : node_(std::make_shared<detail::Node>()) {
  node_->value.assign(shape_numel(shape), fill);
  node_->shape = std::move(shape);
  set_requires_grad(requires_grad);
}

Tensor Tensor::from_values(Shape shape, std::vector<double> values,
                           bool requires_grad) {
  if (values.size() != shape_numel(shape)) {
    throw ShapeError("from_values: " + std::to_string(values.size()) +
                     " values for shape " + shape_str(shape));
  }
  Tensor t;
  t.node_ = std::make_shared<detail::Node>();
  t.node_->shape = std::move(shape);
  t.node_->value = std::move(values);
  t.set_requires_grad(requires_grad);
  return t;
}

double Tensor::item() const {
  if (numel() != 1) {
    throw ShapeError("item() on tensor of shape " + shape_str(shape()));
  }
  return node_->value[0];
}

void Tensor::set_requires_grad(bool on) {
  node_->requires_grad = on;
  if (on) {
    node_->grad.assign(node_->value.size(), 0.0);
  } else {
    node_->grad.clear();
  }
}

std::span<double> Tensor::grad() {
  if (!node_->requires_grad) throw std::logic_error("tensor has no grad");
  return node_->grad;
}

std::span<const double> Tensor::grad() const {
  if (!node_->requires_grad) throw std::logic_error("tensor has no grad");
  return node_->grad;
}

void Tensor::zero_grad() {
  std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

Tensor Tensor::detach() const {
  return from_values(shape(), node_->value, false);
}

void Tensor::backward() const {
  if (numel() != 1) {
    throw ShapeError("backward() needs a scalar loss, got shape " +
                     shape_str(shape()));
  }
  if (!node_->requires_grad) return;

  // Iterative post-order DFS over the nodes that carry gradients.
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> seen;
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->inputs.size()) {
      detail::Node* child = n->inputs[next++].get();
      if (child->requires_grad && !seen.contains(child)) {
        seen.insert(child);
        stack.emplace_back(child, 0);
      }
      continue;
    }
    order.push_back(n);
    stack.pop_back();
  }

  for (auto* n : order) {
    if (!n->is_leaf) n->grad.assign(n->value.size(), 0.0);
  }
  node_->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backward) (*it)->backward(**it);
  }
}

namespace {
thread_local bool no_grad_active = false;
}  // namespace

NoGradGuard::NoGradGuard() : previous_(no_grad_active) { no_grad_active = true; }
NoGradGuard::~NoGradGuard() { no_grad_active = previous_; }
bool NoGradGuard::active() { return no_grad_active; }

namespace detail {

Tensor make_result(Shape shape, std::vector<double> value,
                   std::vector<Tensor> inputs, BackwardFn backward) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  bool any = !no_grad_active && std::any_of(inputs.begin(), inputs.end(),
                         [](const Tensor& t) { return t.requires_grad(); });
  if (any) {
    node->requires_grad = true;
    node->is_leaf = false;
    node->inputs.reserve(inputs.size());
    for (auto& t : inputs) node->inputs.push_back(t.node());
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

}  // namespace detail

}  // namespace pixcolor
