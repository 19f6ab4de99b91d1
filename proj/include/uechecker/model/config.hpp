#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace uechecker::model {

enum class LossKind { kCrossEntropy, kBceLogits };
enum class Ablation { kGcnOnly, kEdgeGcn, kEdgeClusterGcn, kFull };

const char* loss_name(LossKind k);
const char* ablation_name(Ablation a);
Ablation parse_ablation(const std::string& s);

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Architecture and training hyperparameters. Serialized as flat
/// `key=value` lines; see to_text() for the key set.
struct ModelConfig {
  // training
  std::size_t epochs = 600;
  std::size_t batch_size = 30;
  double learning_rate = 2.5e-4;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  LossKind loss = LossKind::kCrossEntropy;
  bool class_weights = false;
  double val_fraction = 0.2;
  /// Stop after this many epochs without a better validation F1; 0 disables.
  std::size_t patience = 0;
  std::uint64_t seed = 0;

  // architecture
  std::size_t embedding_dim = 64;
  std::size_t hidden = 256;
  std::size_t edge_hidden = 32;
  std::size_t heads = 8;
  std::size_t head_dim = 64;
  std::size_t ffn_mult = 4;
  std::size_t conv_kernel = 3;
  std::size_t clusters = 8;
  double dropout = 0.2;
  bool adj_sq = false;
  bool train_embeddings = true;
  /// Graphs with more real nodes than this score a sampled pair subset.
  std::size_t pair_cap = 128;
  /// Initial bias of the edge predictor's output layer. Negative values
  /// start the predicted adjacency sparse (y = exp(bias) per pair).
  double edge_score_bias = -4.0;
  Ablation ablation = Ablation::kFull;

  bool uses_edge_predictor() const { return ablation != Ablation::kGcnOnly; }
  bool uses_cluster() const { return ablation == Ablation::kEdgeClusterGcn || ablation == Ablation::kFull; }
  bool uses_conformer() const { return ablation == Ablation::kFull; }
  std::size_t logits() const { return loss == LossKind::kBceLogits ? 1 : 2; }

  /// Throws ConfigError for out-of-range values.
  void validate() const;
  /// Assigns one key; throws ConfigError for unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  std::string to_text() const;
  /// Applies every `key=value` line on top of the current values. Blank
  /// lines and lines starting with '#' are skipped.
  void apply_text(const std::string& text);
  static ModelConfig from_text(const std::string& text);
  /// Settings that change parameter shapes, used to check checkpoints.
  std::string shape_signature() const;
};

}  // namespace uechecker::model
