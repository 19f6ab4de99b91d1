#include "uechecker/autograd/adamw.hpp"

#include <cmath>
#include <stdexcept>

namespace uechecker::ag {

template <typename T>
OptimizerState<T> make_optimizer_state(const ParameterSet<T>& params, const AdamWConfig& config) {
  OptimizerState<T> s;
  s.config = config;
  for (const auto& p : params.items()) {
    s.m.emplace_back(p.tensor.numel(), T(0));
    s.v.emplace_back(p.tensor.numel(), T(0));
  }
  return s;
}

template <typename T>
void adamw_step(ParameterSet<T>& params, OptimizerState<T>& state) {
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw std::logic_error("optimizer state does not match parameter set");
  }
  const auto& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  const T step_size = static_cast<T>(c.lr / bc1);
  const T bc2_sqrt = static_cast<T>(std::sqrt(bc2));
  const T decay = static_cast<T>(1.0 - c.lr * c.weight_decay);
  const T b1 = static_cast<T>(c.beta1), b2 = static_cast<T>(c.beta2);
  const T one_b1 = static_cast<T>(1.0 - c.beta1), one_b2 = static_cast<T>(1.0 - c.beta2);
  const T eps = static_cast<T>(c.eps);

  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& tensor = params.items()[k].tensor;
    auto w = tensor.mutable_data();
    auto& m = state.m[k];
    auto& v = state.v[k];
    if (m.size() != w.size() || v.size() != w.size()) throw std::logic_error("moment shape mismatch");
    const bool has = tensor.has_grad();
    auto g = tensor.grad();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const T gi = has ? g[i] : T(0);
      w[i] *= decay;
      m[i] = b1 * m[i] + one_b1 * gi;
      v[i] = b2 * v[i] + one_b2 * gi * gi;
      const T denom = std::sqrt(v[i]) / bc2_sqrt + eps;
      w[i] -= step_size * (m[i] / denom);
    }
  }
}

template OptimizerState<float> make_optimizer_state(const ParameterSet<float>&, const AdamWConfig&);
template OptimizerState<double> make_optimizer_state(const ParameterSet<double>&, const AdamWConfig&);
template void adamw_step(ParameterSet<float>&, OptimizerState<float>&);
template void adamw_step(ParameterSet<double>&, OptimizerState<double>&);

}  // namespace uechecker::ag
