#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "uechecker/autograd/tensor.hpp"

namespace uechecker::ag {

template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> tensor;
};

/// Ordered set of named trainable tensors. Names are unique.
template <typename T>
class ParameterSet {
 public:
  Tensor<T>& add(const std::string& name, Tensor<T> t) {
    if (index_.count(name)) throw std::logic_error("duplicate parameter name: " + name);
    if (!t.requires_grad()) throw std::logic_error("parameter does not require grad: " + name);
    index_[name] = params_.size();
    params_.push_back({name, std::move(t)});
    return params_.back().tensor;
  }

  const std::vector<Parameter<T>>& items() const { return params_; }
  std::vector<Parameter<T>>& items() { return params_; }
  std::size_t size() const { return params_.size(); }
  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  Tensor<T>& at(const std::string& name) { return params_.at(index_.at(name)).tensor; }
  const Tensor<T>& at(const std::string& name) const { return params_.at(index_.at(name)).tensor; }

  std::size_t numel() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.tensor.numel();
    return n;
  }
  void zero_grad() {
    for (auto& p : params_) p.tensor.zero_grad();
  }

 private:
  std::vector<Parameter<T>> params_;
  std::map<std::string, std::size_t> index_;
};

}  // namespace uechecker::ag
