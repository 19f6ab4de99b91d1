#pragma once

// Dense tensor with tape-free reverse-mode differentiation.
//
// Every Tensor is a handle to a shared Node. Ops build new nodes that keep
// their inputs alive and carry a backward closure; backward() walks the
// graph in reverse topological order. Values are immutable after creation;
// only gradients accumulate (and leaf parameters are updated in place by
// the optimizer through mutable_data()).

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace uechecker::ag {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& s);
std::size_t shape_numel(const Shape& s);

class ShapeMismatch : public std::runtime_error {
 public:
  ShapeMismatch(const std::string& op, const Shape& a, const Shape& b);
  explicit ShapeMismatch(const std::string& what) : std::runtime_error(what) {}
};

class NonFiniteInput : public std::runtime_error {
 public:
  explicit NonFiniteInput(const std::string& op)
      : std::runtime_error("non-finite input to op '" + op + "'") {}
};

class NotScalarLoss : public std::runtime_error {
 public:
  explicit NotScalarLoss(const Shape& s)
      : std::runtime_error("backward() requires a scalar loss, got shape " + shape_str(s)) {}
};

/// When enabled every op validates that its inputs are finite.
void set_finite_checks(bool enabled);
bool finite_checks();

template <typename T>
struct Node {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;
  bool requires_grad = false;
  bool leaf = true;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this->grad and accumulates into parents' grads.
  std::function<void(Node&)> backward_fn;

  /// Gradient storage, allocated (zeroed) on first use.
  std::vector<T>& grad_buffer() {
    if (grad.size() != value.size()) grad.assign(value.size(), T(0));
    return grad;
  }
};

template <typename T>
class Tensor {
 public:
  using NodePtr = std::shared_ptr<Node<T>>;

  Tensor() = default;
  explicit Tensor(NodePtr node) : node_(std::move(node)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, T value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<T> values, bool requires_grad = false);
  static Tensor scalar(T value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t dim(std::size_t i) const { return node_->shape.at(i); }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t numel() const { return node_->value.size(); }

  std::span<const T> data() const { return node_->value; }
  /// In-place access for leaf tensors (parameters, optimizer updates).
  std::span<T> mutable_data();
  T item() const;
  T at(std::initializer_list<std::size_t> idx) const;

  bool requires_grad() const { return node_->requires_grad; }
  bool has_grad() const { return node_->grad.size() == node_->value.size(); }
  std::span<const T> grad() const { return node_->grad; }
  std::span<T> mutable_grad() { return node_->grad_buffer(); }
  void zero_grad() { node_->grad.clear(); }

  /// Shares the value, drops the graph.
  Tensor detach() const;

  /// Accumulates d(this)/d(leaf) into every reachable leaf that requires
  /// gradients. Intermediate gradients are recomputed on each call, leaf
  /// gradients add up across calls.
  void backward() const;

  const NodePtr& node() const { return node_; }

 private:
  NodePtr node_;
};

namespace detail {

/// Builds an op result. requires_grad is inherited from the parents; the
/// backward closure is only attached when some parent needs it.
template <typename T>
Tensor<T> make_result(Shape shape, std::vector<T> value, std::vector<std::shared_ptr<Node<T>>> parents,
                      const char* op, std::function<void(Node<T>&)> backward_fn);

template <typename T>
void check_finite(std::initializer_list<const Tensor<T>*> inputs, const char* op);

}  // namespace detail

}  // namespace uechecker::ag
