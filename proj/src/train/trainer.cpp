#include "uechecker/train/trainer.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "uechecker/autograd/adamw.hpp"
#include "uechecker/autograd/rng.hpp"
#include "uechecker/train/losses.hpp"

namespace uechecker::train {

using model::GraphBatch;
using model::ModelConfig;
using model::UECheckerModel;

namespace {

template <typename It>
void seeded_shuffle(It first, It last, CounterRng& rng) {
  const auto n = static_cast<std::size_t>(last - first);
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(first[i - 1], first[j]);
  }
}

std::vector<const ingest::GraphSample*> gather(const std::vector<ingest::GraphSample>& samples,
                                               const std::vector<std::size_t>& idx, std::size_t begin, std::size_t end) {
  std::vector<const ingest::GraphSample*> out;
  for (std::size_t i = begin; i < end; ++i) out.push_back(&samples[idx[i]]);
  return out;
}

ag::Tensor<float> loss_for(const ModelConfig& cfg, const ag::Tensor<float>& logits, const std::vector<int>& labels,
                           const std::vector<double>& weights) {
  return cfg.loss == model::LossKind::kBceLogits ? bce_logits_loss(logits, labels, weights)
                                                 : cross_entropy_loss(logits, labels, weights);
}

}  // namespace

Split stratified_split(const std::vector<int>& labels, double val_fraction, std::uint64_t seed) {
  if (val_fraction < 0 || val_fraction >= 1) throw std::invalid_argument("val_fraction must be in [0, 1)");
  Split s;
  for (int cls : {0, 1}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == cls) idx.push_back(i);
    }
    CounterRng rng(seed, 0x73706c74ULL + static_cast<std::uint64_t>(cls));
    seeded_shuffle(idx.begin(), idx.end(), rng);
    const auto n_val = static_cast<std::size_t>(std::llround(static_cast<double>(idx.size()) * val_fraction));
    s.val.insert(s.val.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_val));
    s.train.insert(s.train.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_val), idx.end());
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.val.begin(), s.val.end());
  return s;
}

std::string EpochRecord::to_json() const {
  nlohmann::ordered_json j;
  j["epoch"] = epoch;
  j["train_loss"] = train_loss;
  j["val_acc"] = val.accuracy();
  j["val_precision"] = val.precision();
  j["val_recall"] = val.recall();
  j["val_f1"] = val.f1();
  return j.dump();
}

Prepared prepare(const ModelConfig& cfg, const std::vector<frontend::CallGraph>& graphs,
                 const std::vector<int>& labels) {
  if (graphs.empty()) throw EmptyDataset();
  if (graphs.size() != labels.size()) throw std::invalid_argument("prepare: graph and label counts differ");
  Prepared p{ingest::build_vocab(graphs, cfg.embedding_dim, cfg.seed), {}};
  p.samples.reserve(graphs.size());
  for (std::size_t i = 0; i < graphs.size(); ++i) p.samples.push_back(ingest::featurize(graphs[i], p.vocab, labels[i]));
  return p;
}

Metrics evaluate(UECheckerModel<float>& model, const std::vector<ingest::GraphSample>& samples,
                 const std::vector<std::size_t>* indices, std::vector<double>* probabilities) {
  std::vector<std::size_t> all;
  if (!indices) {
    all.resize(samples.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    indices = &all;
  }
  const std::size_t bs = model.config().batch_size;
  Metrics m;
  for (std::size_t b = 0; b < indices->size(); b += bs) {
    const auto ptrs = gather(samples, *indices, b, std::min(indices->size(), b + bs));
    const auto gb = model::make_graph_batch<float>(ptrs, model.config(), 0);
    const auto logits = model.forward(gb, false);
    m += confusion(model.predict_labels(logits), gb.labels);
    if (probabilities) {
      const auto p = model.positive_probability(logits);
      probabilities->insert(probabilities->end(), p.begin(), p.end());
    }
  }
  return m;
}

Metrics evaluate(const ag::Checkpoint& ckpt, const std::vector<frontend::CallGraph>& graphs,
                 const std::vector<int>& labels) {
  auto model = UECheckerModel<float>::from_checkpoint(ckpt);
  std::vector<ingest::GraphSample> samples;
  for (std::size_t i = 0; i < graphs.size(); ++i) samples.push_back(ingest::featurize(graphs[i], model.vocab(), labels[i]));
  return evaluate(model, samples);
}

TrainResult train(const ModelConfig& cfg, const ingest::LabelVocab& vocab,
                  const std::vector<ingest::GraphSample>& samples, const EpochCallback& on_epoch) {
  if (samples.empty()) throw EmptyDataset();
  cfg.validate();
  TrainResult res;
  std::vector<int> labels;
  for (const auto& s : samples) labels.push_back(s.label);
  res.split = stratified_split(labels, cfg.val_fraction, cfg.seed);
  if (std::count(labels.begin(), labels.end(), 1) == 0 || std::count(labels.begin(), labels.end(), 0) == 0) {
    res.warnings.push_back("dataset contains a single class");
  }
  if (res.split.train.empty()) throw EmptyDataset();

  UECheckerModel<float> model(cfg, vocab);
  ag::AdamWConfig acfg{cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.adam_eps, cfg.weight_decay};
  auto opt = ag::make_optimizer_state(model.parameters(), acfg);

  std::vector<double> weights;
  if (cfg.class_weights) {
    std::vector<int> train_labels;
    for (auto i : res.split.train) train_labels.push_back(labels[i]);
    weights = inverse_frequency_weights(train_labels);
  }

  res.best = model.to_checkpoint(&opt);
  double best_f1 = -1;
  std::size_t since_best = 0;
  auto order = res.split.train;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    CounterRng rng(cfg.seed, 0x65706f6368ULL + epoch);
    std::sort(order.begin(), order.end());
    seeded_shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0;
    for (std::size_t b = 0; b < order.size(); b += cfg.batch_size) {
      const auto ptrs = gather(samples, order, b, std::min(order.size(), b + cfg.batch_size));
      const auto gb = model::make_graph_batch<float>(ptrs, cfg, mix64(cfg.seed ^ (epoch << 20) ^ b));
      const auto logits = model.forward(gb, true);
      const auto loss = loss_for(cfg, logits, gb.labels, weights);
      model.parameters().zero_grad();
      loss.backward();
      ag::adamw_step(model.parameters(), opt);
      loss_sum += static_cast<double>(loss.item()) * static_cast<double>(ptrs.size());
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    rec.val = res.split.val.empty() ? Metrics{} : evaluate(model, samples, &res.split.val);
    res.log.push_back(rec);
    if (on_epoch) on_epoch(rec);
    if (rec.val.f1() > best_f1) {
      best_f1 = rec.val.f1();
      res.best_epoch = epoch;
      res.best_val = rec.val;
      res.best = model.to_checkpoint(&opt);
      since_best = 0;
    } else if (cfg.patience > 0 && ++since_best >= cfg.patience) {
      break;
    }
  }
  if (res.best_epoch == 0 && !res.split.val.empty()) res.best_val = evaluate(model, samples, &res.split.val);
  res.last = model.to_checkpoint(&opt);
  res.edge_predict_calls = model.edge_predict_calls();
  return res;
}

double AblationRow::mean_f1() const {
  double s = 0;
  for (const auto& m : per_seed) s += m.f1();
  return per_seed.empty() ? 0.0 : s / static_cast<double>(per_seed.size());
}

double AblationRow::mean_accuracy() const {
  double s = 0;
  for (const auto& m : per_seed) s += m.accuracy();
  return per_seed.empty() ? 0.0 : s / static_cast<double>(per_seed.size());
}

std::vector<AblationRow> run_ablation(const ModelConfig& cfg, const std::vector<frontend::CallGraph>& graphs,
                                      const std::vector<int>& labels, const std::vector<std::uint64_t>& seeds,
                                      std::vector<model::Ablation> variants) {
  if (variants.empty()) {
    variants = {model::Ablation::kGcnOnly, model::Ablation::kEdgeGcn, model::Ablation::kEdgeClusterGcn,
                model::Ablation::kFull};
  }
  std::vector<AblationRow> rows;
  for (auto v : variants) rows.push_back({v, seeds, {}, 0});
  for (auto seed : seeds) {
    auto c = cfg;
    c.seed = seed;
    const auto prep = prepare(c, graphs, labels);
    for (auto& row : rows) {
      c.ablation = row.ablation;
      const auto r = train(c, prep.vocab, prep.samples);
      row.per_seed.push_back(r.best_val);
      row.edge_predict_calls += r.edge_predict_calls;
    }
  }
  return rows;
}

std::string ablation_report(const std::vector<AblationRow>& rows) {
  std::string out;
  for (const auto& r : rows) {
    nlohmann::ordered_json j;
    j["structure"] = model::ablation_name(r.ablation);
    j["seeds"] = r.seeds;
    auto per = nlohmann::json::array();
    for (const auto& m : r.per_seed) per.push_back(nlohmann::json::parse(metrics_json(m)));
    j["per_seed"] = per;
    j["mean_accuracy"] = r.mean_accuracy();
    j["mean_f1"] = r.mean_f1();
    j["edge_predict_calls"] = r.edge_predict_calls;
    out += j.dump() + "\n";
  }
  return out;
}

}  // namespace uechecker::train
