#pragma once

#include <functional>
#include <vector>

#include "uechecker/autograd/tensor.hpp"

namespace uechecker::ag {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_input = 0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

/// Compares autodiff gradients of the scalar `f()` with respect to every
/// entry of `inputs` against central differences. Inputs must be leaf
/// tensors with requires_grad; they are perturbed in place and restored.
/// Relative error uses max(|a|, |n|, 1e-8) as the denominator.
GradCheckResult grad_check(const std::function<Tensor<double>()>& f, std::vector<Tensor<double>> inputs,
                           double eps = 1e-5);

/// Single-input form: f(x) for a fresh leaf copy of x.
double grad_check(const std::function<Tensor<double>(const Tensor<double>&)>& f, const Tensor<double>& x,
                  double eps = 1e-5);

}  // namespace uechecker::ag
