#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "uechecker/autograd/adamw.hpp"
#include "uechecker/autograd/checkpoint.hpp"
#include "uechecker/ingest/vocab.hpp"
#include "uechecker/model/layers.hpp"

namespace uechecker::model {

class IncompatibleCheckpoint : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Intermediate values of one forward pass.
template <typename T>
struct ForwardTrace {
  std::vector<T> edge_scores;      // per pair, empty when the predictor is bypassed
  std::vector<T> adjacency;        // symmetrized blocks before normalization
  std::vector<T> normalized;       // normalized blocks
  std::vector<std::size_t> assignments;
  std::vector<T> attention_probs;
  std::vector<T> pooled;           // [B, C]
};

/// Embedding -> edge prediction -> relational conv + GCN -> dropout ->
/// clustering -> relational conv + GCN -> Conformer -> dropout -> max pool
/// -> classifier. Ablation variants bypass modules but keep every
/// parameter, so all variants share one parameter layout.
template <typename T>
class UECheckerModel {
 public:
  UECheckerModel(const ModelConfig& cfg, ingest::LabelVocab vocab);
  UECheckerModel(const UECheckerModel&) = delete;
  UECheckerModel& operator=(const UECheckerModel&) = delete;
  UECheckerModel(UECheckerModel&&) = default;
  UECheckerModel& operator=(UECheckerModel&&) = default;

  const ModelConfig& config() const { return cfg_; }
  const ingest::LabelVocab& vocab() const { return vocab_; }
  ag::ParameterSet<T>& parameters() { return params_; }
  const ag::ParameterSet<T>& parameters() const { return params_; }

  /// Logits [B, cfg.logits()]. Training mode applies dropout, uses batch
  /// statistics in batch norm and, on the first call, initializes the
  /// cluster centers from the batch.
  Tensor<T> forward(const GraphBatch<T>& batch, bool train, ForwardTrace<T>* trace = nullptr);

  /// Positive-class probability per graph.
  std::vector<double> positive_probability(const Tensor<T>& logits) const;
  std::vector<int> predict_labels(const Tensor<T>& logits) const;

  std::size_t edge_predict_calls() const { return edge_calls_; }
  bool clusters_initialized() const { return clusters_ready_; }
  std::uint64_t train_forwards() const { return train_forwards_; }

  /// Self-describing snapshot: config, vocabulary, weights, normalization
  /// statistics and, when given, optimizer moments.
  ag::Checkpoint to_checkpoint(const ag::OptimizerState<T>* opt = nullptr) const;
  /// Restores weights (and optimizer moments when `opt` is set). Throws
  /// IncompatibleCheckpoint when shapes or the architecture differ.
  void load(const ag::Checkpoint& ckpt, ag::OptimizerState<T>* opt = nullptr);
  static UECheckerModel from_checkpoint(const ag::Checkpoint& ckpt, ag::OptimizerState<T>* opt = nullptr);

 private:
  void init_clusters(const Tensor<T>& h);
  std::uint64_t dropout_key(std::uint64_t site) const;

  ModelConfig cfg_;
  ingest::LabelVocab vocab_;
  ag::ParameterSet<T> params_;
  Tensor<T> embedding_;
  EdgePredictor<T> edge_;
  Linear<T> gcn1_rel_, gcn2_rel_;
  Tensor<T> gcn1_w_, gcn2_w_;
  Tensor<T> centers_;
  ConformerBlock<T> conformer_;
  Linear<T> classifier_;
  std::size_t edge_calls_ = 0;
  bool clusters_ready_ = false;
  std::uint64_t train_forwards_ = 0;
};

/// Config stored in a checkpoint.
ModelConfig checkpoint_config(const ag::Checkpoint& ckpt);

}  // namespace uechecker::model
