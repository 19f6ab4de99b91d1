#pragma once

#include <cstdint>
#include <vector>

#include "uechecker/autograd/parameter.hpp"

namespace uechecker::ag {

struct AdamWConfig {
  double lr = 2.5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

/// First/second moments per parameter, in ParameterSet order.
template <typename T>
struct OptimizerState {
  AdamWConfig config;
  std::uint64_t step = 0;
  std::vector<std::vector<T>> m;
  std::vector<std::vector<T>> v;
};

template <typename T>
OptimizerState<T> make_optimizer_state(const ParameterSet<T>& params, const AdamWConfig& config);

/// One AdamW update with decoupled weight decay:
///   w <- w * (1 - lr * wd)
///   w <- w - lr / (1 - b1^t) * m / (sqrt(v) / sqrt(1 - b2^t) + eps)
/// Parameters without a gradient buffer are treated as having zero gradient.
template <typename T>
void adamw_step(ParameterSet<T>& params, OptimizerState<T>& state);

}  // namespace uechecker::ag
