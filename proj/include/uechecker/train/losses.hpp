#pragma once

#include <vector>

#include "uechecker/autograd/tensor.hpp"

namespace uechecker::train {

/// Mean of -log softmax(logits)[y] over the batch, logits [B, 2] (or any
/// class count). With `class_weights` the mean is weighted by the weight of
/// each sample's class and normalized by the total weight.
template <typename T>
ag::Tensor<T> cross_entropy_loss(const ag::Tensor<T>& logits, const std::vector<int>& labels,
                                 const std::vector<double>& class_weights = {});

/// Mean of max(z, 0) - z y + log(1 + exp(-|z|)), logits [B, 1] or [B].
template <typename T>
ag::Tensor<T> bce_logits_loss(const ag::Tensor<T>& logits, const std::vector<int>& labels,
                              const std::vector<double>& class_weights = {});

/// Inverse-frequency weights n / (2 n_c); classes absent from `labels` get 0.
std::vector<double> inverse_frequency_weights(const std::vector<int>& labels);

}  // namespace uechecker::train
