#pragma once

// Differentiable core ops. Axis arguments index into the tensor's shape;
// reductions drop the reduced axis.

#include <cstdint>
#include <vector>

#include "uechecker/autograd/tensor.hpp"

namespace uechecker::ag {

// Elementwise, same shape.
template <typename T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);

// Scalar ops.
template <typename T> Tensor<T> scale(const Tensor<T>& x, T s);
template <typename T> Tensor<T> add_scalar(const Tensor<T>& x, T s);
/// x * s where s is a one-element tensor (trainable scale factors).
template <typename T> Tensor<T> scale_by(const Tensor<T>& x, const Tensor<T>& s);

// Row broadcasting over the last axis: x[..., C] op v[C].
template <typename T> Tensor<T> add_rowvec(const Tensor<T>& x, const Tensor<T>& v);
template <typename T> Tensor<T> mul_rowvec(const Tensor<T>& x, const Tensor<T>& v);

// Unary.
template <typename T> Tensor<T> exp(const Tensor<T>& x);
template <typename T> Tensor<T> log(const Tensor<T>& x);
template <typename T> Tensor<T> sqrt(const Tensor<T>& x);
template <typename T> Tensor<T> relu(const Tensor<T>& x);
/// Exact (erf) form.
template <typename T> Tensor<T> gelu(const Tensor<T>& x);
template <typename T> Tensor<T> sigmoid(const Tensor<T>& x);
template <typename T> Tensor<T> clamp(const Tensor<T>& x, T lo, T hi);
/// Gated linear unit over the last axis: first half * sigmoid(second half).
template <typename T> Tensor<T> glu(const Tensor<T>& x);

// Reductions.
template <typename T> Tensor<T> sum(const Tensor<T>& x);
template <typename T> Tensor<T> mean(const Tensor<T>& x);
template <typename T> Tensor<T> sum(const Tensor<T>& x, std::size_t axis);
template <typename T> Tensor<T> mean(const Tensor<T>& x, std::size_t axis);
/// Max over an axis; the gradient goes to the first maximal entry.
template <typename T> Tensor<T> max_pool_over_axis(const Tensor<T>& x, std::size_t axis);
/// Max over the node axis of x[B, N, C]. Slots with mask[b * N + n] == 0
/// take part as -inf; a graph with no real node pools to 0.
template <typename T>
Tensor<T> masked_max_pool_nodes(const Tensor<T>& x, const std::vector<std::uint8_t>& mask);

// Shape.
template <typename T> Tensor<T> reshape(const Tensor<T>& x, Shape shape);
/// Swaps the last two axes.
template <typename T> Tensor<T> transpose(const Tensor<T>& x);
template <typename T> Tensor<T> concat(const std::vector<Tensor<T>>& parts, std::size_t axis);
/// Columns [begin, end) of the last axis.
template <typename T> Tensor<T> slice_last(const Tensor<T>& x, std::size_t begin, std::size_t end);
/// Entries where mask != 0 are replaced by `value` (no gradient through them).
template <typename T> Tensor<T> masked_fill(const Tensor<T>& x, const std::vector<std::uint8_t>& mask, T value);
/// Multiplies each row of x[..., N, C] by mask[..., N].
template <typename T> Tensor<T> mask_rows(const Tensor<T>& x, const std::vector<std::uint8_t>& mask);

// Linear algebra.
template <typename T> Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> batched_matmul(const Tensor<T>& a, const Tensor<T>& b);
/// x[..., in] * w[in, out] (+ b[out]). `b` may be undefined.
template <typename T> Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b);

// Normalization and stochastic ops.
template <typename T> Tensor<T> softmax(const Tensor<T>& x, std::size_t axis);
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, T eps = T(1e-5));

template <typename T>
struct BatchNormState {
  std::vector<T> running_mean;
  std::vector<T> running_var;
  T momentum = T(0.1);
  T eps = T(1e-5);
  explicit BatchNormState(std::size_t channels = 0)
      : running_mean(channels, T(0)), running_var(channels, T(1)) {}
};

/// Normalizes each column of x[R, C] over the rows. In training mode the
/// batch statistics are used and the running statistics are updated.
template <typename T>
Tensor<T> batch_norm_1d(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                        BatchNormState<T>& state, bool train);

/// Inverted dropout: zeroes each entry with probability p and scales the
/// survivors by 1/(1-p). `key` selects the random stream. Identity when
/// train is false or p == 0.
template <typename T> Tensor<T> dropout(const Tensor<T>& x, T p, bool train, std::uint64_t key);

// Non-differentiable helpers over the last axis of a 2-D tensor.
template <typename T> std::vector<std::size_t> argmax_rows(const Tensor<T>& x);
template <typename T> std::vector<std::size_t> argmin_rows(const Tensor<T>& x);

}  // namespace uechecker::ag
