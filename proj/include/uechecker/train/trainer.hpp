#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "uechecker/autograd/checkpoint.hpp"
#include "uechecker/ingest/sample.hpp"
#include "uechecker/model/model.hpp"
#include "uechecker/train/metrics.hpp"

namespace uechecker::train {

class EmptyDataset : public std::runtime_error {
 public:
  EmptyDataset() : std::runtime_error("dataset is empty") {}
};

struct Split {
  std::vector<std::size_t> train, val;  // ascending sample indices
};

/// Per-class seeded split; each class contributes round(n_c * fraction)
/// samples to validation.
Split stratified_split(const std::vector<int>& labels, double val_fraction, std::uint64_t seed);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0;
  Metrics val;
  std::string to_json() const;
};

struct TrainResult {
  Split split;
  std::vector<EpochRecord> log;
  std::size_t best_epoch = 0;  // 0 when no epoch ran
  Metrics best_val;
  ag::Checkpoint best;         // best validation F1 (initial weights when epochs = 0)
  ag::Checkpoint last;
  std::size_t edge_predict_calls = 0;
  std::vector<std::string> warnings;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Vocabulary (seeded by cfg.seed) plus featurized samples.
struct Prepared {
  ingest::LabelVocab vocab;
  std::vector<ingest::GraphSample> samples;
};
Prepared prepare(const model::ModelConfig& cfg, const std::vector<frontend::CallGraph>& graphs,
                 const std::vector<int>& labels);

/// Seeded mini-batch AdamW training with a stratified validation split.
/// Single-threaded and bitwise reproducible for a fixed config.
TrainResult train(const model::ModelConfig& cfg, const ingest::LabelVocab& vocab,
                  const std::vector<ingest::GraphSample>& samples, const EpochCallback& on_epoch = {});

/// Eval-mode metrics over `indices` (all samples when null).
Metrics evaluate(model::UECheckerModel<float>& model, const std::vector<ingest::GraphSample>& samples,
                 const std::vector<std::size_t>* indices = nullptr, std::vector<double>* probabilities = nullptr);

/// Featurizes with the checkpoint's vocabulary and evaluates.
Metrics evaluate(const ag::Checkpoint& ckpt, const std::vector<frontend::CallGraph>& graphs,
                 const std::vector<int>& labels);

struct AblationRow {
  model::Ablation ablation = model::Ablation::kFull;
  std::vector<std::uint64_t> seeds;
  std::vector<Metrics> per_seed;  // best validation metrics per seed
  std::size_t edge_predict_calls = 0;
  double mean_f1() const;
  double mean_accuracy() const;
};

/// Every variant trained on the same seeds and splits. `variants` defaults
/// to all four.
std::vector<AblationRow> run_ablation(const model::ModelConfig& cfg, const std::vector<frontend::CallGraph>& graphs,
                                      const std::vector<int>& labels, const std::vector<std::uint64_t>& seeds,
                                      std::vector<model::Ablation> variants = {});

/// One JSON line per variant.
std::string ablation_report(const std::vector<AblationRow>& rows);

}  // namespace uechecker::train
