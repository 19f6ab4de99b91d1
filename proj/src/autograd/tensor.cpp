#include "uechecker/autograd/tensor.hpp"

#include <atomic>
#include <cmath>
#include <sstream>
#include <unordered_set>

namespace uechecker::ag {

namespace {
std::atomic<bool> g_finite_checks{false};
}  // namespace

void set_finite_checks(bool enabled) { g_finite_checks.store(enabled); }
bool finite_checks() { return g_finite_checks.load(); }

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) os << ", ";
    os << s[i];
  }
  os << ']';
  return os.str();
}

std::size_t shape_numel(const Shape& s) {
  std::size_t n = 1;
  for (auto d : s) n *= d;
  return n;
}

ShapeMismatch::ShapeMismatch(const std::string& op, const Shape& a, const Shape& b)
    : std::runtime_error("shape mismatch in '" + op + "': " + shape_str(a) + " vs " + shape_str(b)) {}

template <typename T>
Tensor<T> Tensor<T>::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), T(0), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::full(Shape shape, T value, bool requires_grad) {
  auto node = std::make_shared<Node<T>>();
  node->value.assign(shape_numel(shape), value);
  node->shape = std::move(shape);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

template <typename T>
Tensor<T> Tensor<T>::from(Shape shape, std::vector<T> values, bool requires_grad) {
  if (shape_numel(shape) != values.size()) {
    throw ShapeMismatch("Tensor::from: shape " + shape_str(shape) + " holds " +
                        std::to_string(shape_numel(shape)) + " values, got " + std::to_string(values.size()));
  }
  auto node = std::make_shared<Node<T>>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

template <typename T>
Tensor<T> Tensor<T>::scalar(T value, bool requires_grad) {
  return from({1}, {value}, requires_grad);
}

template <typename T>
std::span<T> Tensor<T>::mutable_data() {
  if (!node_->leaf) throw std::logic_error("mutable_data() on a non-leaf tensor");
  return node_->value;
}

template <typename T>
T Tensor<T>::item() const {
  if (numel() != 1) throw ShapeMismatch("item() on tensor of shape " + shape_str(shape()));
  return node_->value[0];
}

template <typename T>
T Tensor<T>::at(std::initializer_list<std::size_t> idx) const {
  if (idx.size() != rank()) throw ShapeMismatch("at(): rank mismatch for shape " + shape_str(shape()));
  std::size_t flat = 0;
  std::size_t d = 0;
  for (auto i : idx) {
    if (i >= node_->shape[d]) throw std::out_of_range("Tensor::at index out of range");
    flat = flat * node_->shape[d] + i;
    ++d;
  }
  return node_->value[flat];
}

template <typename T>
Tensor<T> Tensor<T>::detach() const {
  auto node = std::make_shared<Node<T>>();
  node->shape = node_->shape;
  node->value = node_->value;
  return Tensor(std::move(node));
}

template <typename T>
void Tensor<T>::backward() const {
  if (numel() != 1) throw NotScalarLoss(shape());
  if (!node_->requires_grad) return;

  // Iterative post-order DFS gives a topological order with parents first.
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> seen;
  std::vector<std::pair<Node<T>*, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      Node<T>* p = n->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  for (Node<T>* n : order) {
    if (!n->leaf) n->grad.assign(n->value.size(), T(0));
  }
  node_->grad_buffer()[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* n = *it;
    if (!n->leaf && n->backward_fn) n->backward_fn(*n);
  }
}

namespace detail {

template <typename T>
Tensor<T> make_result(Shape shape, std::vector<T> value, std::vector<std::shared_ptr<Node<T>>> parents,
                      const char* op, std::function<void(Node<T>&)> backward_fn) {
  auto node = std::make_shared<Node<T>>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->op = op;
  node->leaf = false;
  bool needs = false;
  for (const auto& p : parents) needs = needs || p->requires_grad;
  node->requires_grad = needs;
  if (needs) {
    node->parents = std::move(parents);
    node->backward_fn = std::move(backward_fn);
  }
  return Tensor<T>(std::move(node));
}

template <typename T>
void check_finite(std::initializer_list<const Tensor<T>*> inputs, const char* op) {
  if (!finite_checks()) return;
  for (const auto* t : inputs) {
    if (t == nullptr || !t->defined()) continue;
    for (T v : t->data()) {
      if (!std::isfinite(v)) throw NonFiniteInput(op);
    }
  }
}

template Tensor<float> make_result(Shape, std::vector<float>, std::vector<std::shared_ptr<Node<float>>>,
                                   const char*, std::function<void(Node<float>&)>);
template Tensor<double> make_result(Shape, std::vector<double>, std::vector<std::shared_ptr<Node<double>>>,
                                    const char*, std::function<void(Node<double>&)>);
template void check_finite(std::initializer_list<const Tensor<float>*>, const char*);
template void check_finite(std::initializer_list<const Tensor<double>*>, const char*);

}  // namespace detail

template class Tensor<float>;
template class Tensor<double>;

}  // namespace uechecker::ag
