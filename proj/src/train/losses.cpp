#include "uechecker/train/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace uechecker::train {

namespace {

void check_labels(const std::vector<int>& labels, std::size_t batch, std::size_t classes) {
  if (labels.size() != batch) throw ag::ShapeMismatch("loss: label count does not match the batch");
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= std::max<std::size_t>(classes, 2)) {
      throw std::invalid_argument("loss: label out of range");
    }
  }
}

std::vector<double> sample_weights(const std::vector<int>& labels, const std::vector<double>& class_weights) {
  std::vector<double> w(labels.size(), 1.0);
  if (class_weights.empty()) return w;
  for (std::size_t b = 0; b < labels.size(); ++b) w[b] = class_weights.at(static_cast<std::size_t>(labels[b]));
  return w;
}

}  // namespace

std::vector<double> inverse_frequency_weights(const std::vector<int>& labels) {
  std::vector<double> counts(2, 0.0);
  for (int y : labels) counts.at(static_cast<std::size_t>(y)) += 1;
  std::vector<double> w(2, 0.0);
  for (std::size_t c = 0; c < 2; ++c) {
    if (counts[c] > 0) w[c] = static_cast<double>(labels.size()) / (2.0 * counts[c]);
  }
  return w;
}

template <typename T>
ag::Tensor<T> cross_entropy_loss(const ag::Tensor<T>& logits, const std::vector<int>& labels,
                                 const std::vector<double>& class_weights) {
  if (logits.rank() != 2) throw ag::ShapeMismatch("cross_entropy_loss expects [B, classes]");
  const std::size_t B = logits.dim(0), K = logits.dim(1);
  check_labels(labels, B, K);
  const auto w = sample_weights(labels, class_weights);
  double total_w = 0;
  for (double x : w) total_w += x;
  const double norm = total_w > 0 ? 1.0 / total_w : 0.0;

  auto z = logits.data();
  std::vector<T> probs(B * K);
  double loss = 0;
  for (std::size_t b = 0; b < B; ++b) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < K; ++k) m = std::max(m, static_cast<double>(z[b * K + k]));
    double s = 0;
    for (std::size_t k = 0; k < K; ++k) s += std::exp(static_cast<double>(z[b * K + k]) - m);
    const double lse = m + std::log(s);
    for (std::size_t k = 0; k < K; ++k) probs[b * K + k] = static_cast<T>(std::exp(static_cast<double>(z[b * K + k]) - lse));
    loss += w[b] * (lse - static_cast<double>(z[b * K + static_cast<std::size_t>(labels[b])]));
  }
  return ag::detail::make_result<T>(
      {}, {static_cast<T>(loss * norm)}, {logits.node()}, "cross_entropy_loss",
      [probs = std::move(probs), labels, w, norm, B, K](ag::Node<T>& self) {
        auto* p = self.parents[0].get();
        if (!p->requires_grad) return;
        auto& g = p->grad_buffer();
        const double up = static_cast<double>(self.grad[0]);
        for (std::size_t b = 0; b < B; ++b) {
          const double scale = up * w[b] * norm;
          for (std::size_t k = 0; k < K; ++k) {
            const double target = static_cast<std::size_t>(labels[b]) == k ? 1.0 : 0.0;
            g[b * K + k] += static_cast<T>(scale * (static_cast<double>(probs[b * K + k]) - target));
          }
        }
      });
}

template <typename T>
ag::Tensor<T> bce_logits_loss(const ag::Tensor<T>& logits, const std::vector<int>& labels,
                              const std::vector<double>& class_weights) {
  if (logits.numel() != labels.size() || (logits.rank() == 2 && logits.dim(1) != 1) || logits.rank() > 2) {
    throw ag::ShapeMismatch("bce_logits_loss expects [B, 1] or [B]");
  }
  const std::size_t B = labels.size();
  check_labels(labels, B, 1);
  const auto w = sample_weights(labels, class_weights);
  double total_w = 0;
  for (double x : w) total_w += x;
  const double norm = total_w > 0 ? 1.0 / total_w : 0.0;
  auto z = logits.data();
  double loss = 0;
  for (std::size_t b = 0; b < B; ++b) {
    const double v = z[b], y = labels[b];
    loss += w[b] * (std::max(v, 0.0) - v * y + std::log1p(std::exp(-std::abs(v))));
  }
  return ag::detail::make_result<T>(
      {}, {static_cast<T>(loss * norm)}, {logits.node()}, "bce_logits_loss", [labels, w, norm, B](ag::Node<T>& self) {
        auto* p = self.parents[0].get();
        if (!p->requires_grad) return;
        auto& g = p->grad_buffer();
        const double up = static_cast<double>(self.grad[0]);
        for (std::size_t b = 0; b < B; ++b) {
          const double v = p->value[b];
          const double sig = v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
          g[b] += static_cast<T>(up * w[b] * norm * (sig - labels[b]));
        }
      });
}

template ag::Tensor<float> cross_entropy_loss(const ag::Tensor<float>&, const std::vector<int>&, const std::vector<double>&);
template ag::Tensor<double> cross_entropy_loss(const ag::Tensor<double>&, const std::vector<int>&, const std::vector<double>&);
template ag::Tensor<float> bce_logits_loss(const ag::Tensor<float>&, const std::vector<int>&, const std::vector<double>&);
template ag::Tensor<double> bce_logits_loss(const ag::Tensor<double>&, const std::vector<int>&, const std::vector<double>&);

}  // namespace uechecker::train
