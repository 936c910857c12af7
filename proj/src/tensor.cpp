#include "stance/tensor.hpp"

#include <cmath>
#include <sstream>
#include <unordered_set>

namespace stance {

namespace {
thread_local bool g_check_finite = false;
thread_local bool g_no_grad = false;
}

NoGradGuard::NoGradGuard() : previous_(g_no_grad) { g_no_grad = true; }
NoGradGuard::~NoGradGuard() { g_no_grad = previous_; }

void set_check_finite(bool enabled) { g_check_finite = enabled; }
bool check_finite_enabled() { return g_check_finite; }

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << 'x';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

static std::shared_ptr<detail::Node> new_node(Shape shape, std::vector<Real> values,
                                              bool requires_grad) {
  for (std::size_t d : shape) {
    if (d == 0) throw DimensionError("tensor dimensions must be positive: " + shape_string(shape));
  }
  if (shape_size(shape) != values.size()) {
    throw DimensionError("shape " + shape_string(shape) + " does not match " +
                         std::to_string(values.size()) + " values");
  }
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->data = std::move(values);
  node->requires_grad = requires_grad;
  if (requires_grad) node->grad.assign(node->data.size(), 0.0);
  return node;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return filled(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::filled(Shape shape, Real value, bool requires_grad) {
  std::vector<Real> values(shape_size(shape), value);
  return Tensor(new_node(std::move(shape), std::move(values), requires_grad));
}

Tensor Tensor::from(Shape shape, std::vector<Real> values, bool requires_grad) {
  return Tensor(new_node(std::move(shape), std::move(values), requires_grad));
}

Tensor Tensor::scalar(Real value, bool requires_grad) {
  return from({1}, {value}, requires_grad);
}

Real Tensor::item() const {
  if (size() != 1) throw DimensionError("item() on tensor of shape " + shape_string(shape()));
  return node_->data[0];
}

Real Tensor::at(std::size_t i, std::size_t j) const {
  if (rank() != 2) throw DimensionError("at(i,j) needs a matrix");
  return node_->data.at(i * node_->shape[1] + j);
}

Tensor Tensor::clone(bool requires_grad) const {
  return Tensor(new_node(node_->shape, node_->data, requires_grad));
}

void Tensor::zero_grad() {
  if (node_->requires_grad) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

void Tensor::backward() {
  if (size() != 1) throw DimensionError("backward() needs a scalar, got " + shape_string(shape()));
  if (!requires_grad()) return;

  // Iterative post-order DFS; the graph can be thousands of nodes deep.
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> seen;
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      detail::Node* p = n->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  // Interior nodes start from zero so repeated backward calls on fresh
  // graphs only accumulate into leaves.
  for (detail::Node* n : order) {
    if (n->backward) std::fill(n->grad.begin(), n->grad.end(), 0.0);
  }
  node_->grad[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* n = *it;
    if (n->backward) {
      n->backward(*n);
      if (g_check_finite) {
        for (const auto& p : n->parents) {
          for (Real g : p->grad) {
            if (!std::isfinite(g)) {
              throw NumericalError(std::string("non-finite gradient flowing out of '") + n->op + "'");
            }
          }
        }
      }
    }
  }
}

Tensor make_result(const char* op, Shape shape, std::vector<Real> values,
                   std::vector<Tensor> inputs,
                   std::function<void(detail::Node&)> backward) {
  if (g_check_finite) {
    for (Real v : values) {
      if (!std::isfinite(v)) throw NumericalError(std::string("non-finite value produced by '") + op + "'");
    }
  }
  bool needs_grad = false;
  for (const Tensor& t : inputs) needs_grad = needs_grad || (t.requires_grad() && !g_no_grad);
  auto node = new_node(std::move(shape), std::move(values), needs_grad);
  node->op = op;
  if (needs_grad) {
    node->parents.reserve(inputs.size());
    for (const Tensor& t : inputs) node->parents.push_back(t.node_ptr());
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

}  // namespace stance
