#include "uechecker/autograd/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace uechecker::ag {

GradCheckResult grad_check(const std::function<Tensor<double>()>& f, std::vector<Tensor<double>> inputs,
                           double eps) {
  for (auto& t : inputs) t.zero_grad();
  f().backward();
  std::vector<std::vector<double>> analytic;
  for (auto& t : inputs) {
    analytic.emplace_back(t.has_grad() ? std::vector<double>(t.grad().begin(), t.grad().end())
                                       : std::vector<double>(t.numel(), 0.0));
    t.zero_grad();
  }

  GradCheckResult res;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    auto data = inputs[k].mutable_data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double orig = data[i];
      data[i] = orig + eps;
      const double fp = f().item();
      data[i] = orig - eps;
      const double fm = f().item();
      data[i] = orig;
      const double num = (fp - fm) / (2.0 * eps);
      const double a = analytic[k][i];
      const double err = std::abs(a - num) / std::max({std::abs(a), std::abs(num), 1e-8});
      if (err > res.max_rel_error) res = {err, k, i, a, num};
    }
  }
  return res;
}

double grad_check(const std::function<Tensor<double>(const Tensor<double>&)>& f, const Tensor<double>& x,
                  double eps) {
  auto leaf = Tensor<double>::from(x.shape(), std::vector<double>(x.data().begin(), x.data().end()), true);
  return grad_check([&] { return f(leaf); }, {leaf}, eps).max_rel_error;
}

}  // namespace uechecker::ag
