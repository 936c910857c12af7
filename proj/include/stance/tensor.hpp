#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace stance {

// Element type of every tensor. Parameters are kept representable in
// 32-bit floats (see Adam::step and the checkpoint format); arithmetic runs
// in double so finite-difference checks resolve gradients to 1e-4.
using Real = double;
using Shape = std::vector<std::size_t>;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

namespace detail {

struct Node {
  Shape shape;
  std::vector<Real> data;
  std::vector<Real> grad;  // allocated iff requires_grad
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this node's grad and accumulates into parents' grads.
  std::function<void(Node&)> backward;
};

}  // namespace detail

// Reference-semantics handle to a node of a define-by-run compute graph.
// Copies alias the same storage; use clone() for a deep copy.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor filled(Shape shape, Real value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<Real> values,
                     bool requires_grad = false);
  static Tensor scalar(Real value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t i) const { return node_->shape.at(i); }
  std::size_t size() const { return node_->data.size(); }

  std::span<const Real> data() const { return node_->data; }
  std::span<Real> mutable_data() { return node_->data; }
  std::span<const Real> grad() const { return node_->grad; }
  std::span<Real> mutable_grad() { return node_->grad; }

  bool requires_grad() const { return node_->requires_grad; }
  const char* op() const { return node_->op; }

  Real item() const;
  Real at(std::size_t i, std::size_t j) const;

  // Deep copy of the values as a fresh leaf.
  Tensor clone(bool requires_grad = false) const;
  // Same values, no graph history, no gradient.
  Tensor detach() const { return clone(false); }

  void zero_grad();
  // Reverse-mode sweep from a scalar: every node reachable through
  // requires_grad edges is visited once, in reverse topological order.
  void backward();

  detail::Node* node() const { return node_.get(); }
  const std::shared_ptr<detail::Node>& node_ptr() const { return node_; }
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<detail::Node> node_;
};

// When enabled, every op checks its output for NaN/Inf and throws
// NumericalError naming the op. Off by default; per thread.
void set_check_finite(bool enabled);
bool check_finite_enabled();

// While alive, ops on this thread record no graph (inference mode).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Builds a result node wired to its inputs. The node only keeps parents and a
// backward closure when some input requires a gradient.
Tensor make_result(const char* op, Shape shape, std::vector<Real> values,
                   std::vector<Tensor> inputs,
                   std::function<void(detail::Node&)> backward);

}  // namespace stance
