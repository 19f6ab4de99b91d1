#include "uechecker/model/model.hpp"

#include <cmath>

#include "json.hpp"
#include "uechecker/autograd/rng.hpp"

namespace uechecker::model {

namespace {

constexpr const char* kConfigKey = "model.config";
constexpr const char* kSignatureKey = "model.signature";
constexpr const char* kVocabKey = "vocab.labels";

template <typename T>
void put_tensor(ag::Checkpoint& ck, const std::string& name, const ag::Shape& shape, std::span<const T> data) {
  std::vector<std::uint64_t> dims(shape.begin(), shape.end());
  if constexpr (std::is_same_v<T, float>) {
    ck.add_f32(name, std::move(dims), std::vector<float>(data.begin(), data.end()));
  } else {
    ck.add_f64(name, std::move(dims), std::vector<double>(data.begin(), data.end()));
  }
}

template <typename T>
std::vector<T> get_values(const ag::Checkpoint& ck, const std::string& name, std::size_t expected) {
  const auto* rec = ck.find(name);
  if (!rec) throw IncompatibleCheckpoint("checkpoint is missing tensor " + name);
  std::vector<T> out;
  if (rec->f64) {
    out.assign(rec->f64_data.begin(), rec->f64_data.end());
  } else {
    out.assign(rec->f32_data.begin(), rec->f32_data.end());
  }
  if (out.size() != expected) {
    throw IncompatibleCheckpoint("tensor " + name + " has " + std::to_string(out.size()) + " elements, expected " +
                                 std::to_string(expected));
  }
  return out;
}

template <typename T>
Tensor<T> constant(const std::vector<T>& values, std::size_t n) {
  return Tensor<T>::from({n}, values);
}

}  // namespace

ModelConfig checkpoint_config(const ag::Checkpoint& ckpt) {
  auto it = ckpt.entries.find(kConfigKey);
  if (it == ckpt.entries.end()) throw IncompatibleCheckpoint("checkpoint carries no model config");
  try {
    return ModelConfig::from_text(it->second);
  } catch (const ConfigError& e) {
    throw IncompatibleCheckpoint(std::string("checkpoint config is invalid: ") + e.what());
  }
}

template <typename T>
UECheckerModel<T>::UECheckerModel(const ModelConfig& cfg, ingest::LabelVocab vocab) : cfg_(cfg), vocab_(std::move(vocab)) {
  cfg_.validate();
  if (vocab_.embedding_dim != cfg_.embedding_dim) {
    throw ConfigError("vocabulary embedding dim " + std::to_string(vocab_.embedding_dim) +
                      " does not match embedding_dim " + std::to_string(cfg_.embedding_dim));
  }
  const Initializer init(cfg_.seed);
  const std::size_t E = cfg_.embedding_dim, C = cfg_.hidden, R = ingest::kRelations;

  embedding_ = Tensor<T>::from({vocab_.size(), E}, std::vector<T>(vocab_.embedding.begin(), vocab_.embedding.end()),
                               cfg_.train_embeddings);
  if (cfg_.train_embeddings) params_.add("embedding", embedding_);

  edge_ = EdgePredictor<T>(params_, init, "edge", E, cfg_.edge_hidden);
  for (auto& b : edge_.fc2.bias.mutable_data()) b = static_cast<T>(cfg_.edge_score_bias);
  gcn1_rel_ = Linear<T>(params_, init, "gcn1.rel", R * E, C);
  const double wb = 1.0 / std::sqrt(static_cast<double>(C));
  gcn1_w_ = params_.add("gcn1.weight", init.uniform<T>("gcn1.weight", {C, C}, wb));
  centers_ = params_.add("cluster.centers", init.uniform<T>("cluster.centers", {cfg_.clusters, C}, wb));
  gcn2_rel_ = Linear<T>(params_, init, "gcn2.rel", R * C, C);
  gcn2_w_ = params_.add("gcn2.weight", init.uniform<T>("gcn2.weight", {C, C}, wb));
  conformer_ = ConformerBlock<T>(params_, init, "conformer", cfg_);
  classifier_ = Linear<T>(params_, init, "classifier", C, cfg_.logits());
}

template <typename T>
std::uint64_t UECheckerModel<T>::dropout_key(std::uint64_t site) const {
  return mix64(mix64(cfg_.seed ^ 0x64726f70ULL) + train_forwards_ * 0x9e3779b97f4a7c15ULL + site);
}

template <typename T>
void UECheckerModel<T>::init_clusters(const Tensor<T>& h) {
  // k-means++ seeding on the first training batch.
  const std::size_t rows = h.dim(0), C = h.dim(1), K = cfg_.clusters;
  auto vals = h.data();
  auto centers = centers_.mutable_data();
  CounterRng rng(cfg_.seed, 0x636c7573ULL);
  std::vector<double> best(rows, std::numeric_limits<double>::infinity());
  std::size_t pick = static_cast<std::size_t>(rng.below(rows));
  for (std::size_t k = 0; k < K; ++k) {
    std::copy_n(vals.begin() + static_cast<std::ptrdiff_t>(pick * C), C, centers.begin() + static_cast<std::ptrdiff_t>(k * C));
    double total = 0;
    for (std::size_t r = 0; r < rows; ++r) {
      double d = 0;
      for (std::size_t c = 0; c < C; ++c) {
        const double diff = static_cast<double>(vals[r * C + c]) - static_cast<double>(centers[k * C + c]);
        d += diff * diff;
      }
      best[r] = std::min(best[r], d);
      total += best[r];
    }
    if (k + 1 == K) break;
    if (total <= 0) {
      pick = static_cast<std::size_t>(rng.below(rows));
      continue;
    }
    double target = rng.uniform() * total;
    pick = rows - 1;
    for (std::size_t r = 0; r < rows; ++r) {
      target -= best[r];
      if (target < 0) {
        pick = r;
        break;
      }
    }
  }
  clusters_ready_ = true;
}

template <typename T>
Tensor<T> UECheckerModel<T>::forward(const GraphBatch<T>& batch, bool train, ForwardTrace<T>* trace) {
  const auto& layout = batch.layout;
  if (batch.label_ids.size() != layout.rows()) throw ag::ShapeMismatch("forward: label ids do not match the layout");
  for (auto id : batch.label_ids) {
    if (id >= vocab_.size()) throw std::out_of_range("label id " + std::to_string(id) + " outside the vocabulary");
  }
  const T p = static_cast<T>(cfg_.dropout);
  const auto x = ag::embedding_lookup(embedding_, batch.label_ids);

  Tensor<T> scores;
  static const std::vector<ag::ScoredPair> kNoPairs;
  const auto& pairs = cfg_.uses_edge_predictor() ? batch.pairs : kNoPairs;
  if (cfg_.uses_edge_predictor() && !pairs.empty()) {
    scores = edge_predict(edge_, x, pairs, train);
    ++edge_calls_;
  }
  const auto a = symmetrize_adjacency(scores, pairs, batch.adjacency, layout);
  const auto a_norm = ag::normalize_blocks(a, layout);

  std::vector<Tensor<T>> rel;
  for (const auto& r : batch.relation) rel.push_back(constant(r, r.size()));

  auto h = gcn_layer(relational_graph_conv(x, rel, gcn1_rel_, layout), a_norm, gcn1_w_, layout);
  h = ag::dropout(h, p, train, dropout_key(1));
  if (cfg_.uses_cluster()) {
    if (train && !clusters_ready_ && h.dim(0) > 0) init_clusters(h);
    h = cluster_forward(h, centers_, trace ? &trace->assignments : nullptr);
  }
  h = gcn_layer(relational_graph_conv(h, rel, gcn2_rel_, layout), a_norm, gcn2_w_, layout);
  if (cfg_.uses_conformer()) {
    h = conformer_forward(conformer_, h, layout, train, dropout_key(3), trace ? &trace->attention_probs : nullptr);
  }
  h = ag::dropout(h, p, train, dropout_key(2));
  const auto pooled = ag::segment_max_pool(h, layout);
  const auto logits = classifier_(pooled);

  if (train) ++train_forwards_;
  if (trace) {
    if (scores.defined()) trace->edge_scores.assign(scores.data().begin(), scores.data().end());
    trace->adjacency.assign(a.data().begin(), a.data().end());
    trace->normalized.assign(a_norm.data().begin(), a_norm.data().end());
    trace->pooled.assign(pooled.data().begin(), pooled.data().end());
  }
  return logits;
}

template <typename T>
std::vector<double> UECheckerModel<T>::positive_probability(const Tensor<T>& logits) const {
  const std::size_t B = logits.dim(0), L = logits.dim(1);
  auto v = logits.data();
  std::vector<double> out(B);
  for (std::size_t b = 0; b < B; ++b) {
    if (L == 1) {
      out[b] = 1.0 / (1.0 + std::exp(-static_cast<double>(v[b])));
    } else {
      const double z0 = v[b * 2], z1 = v[b * 2 + 1];
      const double m = std::max(z0, z1);
      const double e0 = std::exp(z0 - m), e1 = std::exp(z1 - m);
      out[b] = e1 / (e0 + e1);
    }
  }
  return out;
}

template <typename T>
std::vector<int> UECheckerModel<T>::predict_labels(const Tensor<T>& logits) const {
  std::vector<int> out;
  const std::size_t B = logits.dim(0), L = logits.dim(1);
  auto v = logits.data();
  for (std::size_t b = 0; b < B; ++b) {
    // Argmax with ties to class 0; the 1-logit head thresholds at 0.5.
    out.push_back(L == 1 ? (v[b] > T(0) ? 1 : 0) : (v[b * 2 + 1] > v[b * 2] ? 1 : 0));
  }
  return out;
}

template <typename T>
ag::Checkpoint UECheckerModel<T>::to_checkpoint(const ag::OptimizerState<T>* opt) const {
  ag::Checkpoint ck;
  ck.entries[kConfigKey] = cfg_.to_text();
  ck.entries[kSignatureKey] = cfg_.shape_signature();
  ck.entries[kVocabKey] = nlohmann::json(vocab_.labels).dump();
  ck.entries["model.clusters_initialized"] = clusters_ready_ ? "1" : "0";
  ck.entries["model.train_forwards"] = std::to_string(train_forwards_);
  ck.add_f64("vocab.embedding", {vocab_.size(), vocab_.embedding_dim}, vocab_.embedding);
  if (!cfg_.train_embeddings) put_tensor<T>(ck, "embedding", embedding_.shape(), embedding_.data());
  for (const auto& p : params_.items()) put_tensor<T>(ck, p.name, p.tensor.shape(), p.tensor.data());
  auto put_bn = [&](const std::string& name, const ag::BatchNormState<T>& s) {
    put_tensor<T>(ck, name + ".running_mean", {s.running_mean.size()}, std::span<const T>(s.running_mean));
    put_tensor<T>(ck, name + ".running_var", {s.running_var.size()}, std::span<const T>(s.running_var));
  };
  put_bn("edge.bn", edge_.bn.state);
  put_bn("conformer.conv.bn", conformer_.conv.bn.state);
  if (opt) {
    ck.entries["optimizer.step"] = std::to_string(opt->step);
    const auto& items = params_.items();
    for (std::size_t i = 0; i < items.size(); ++i) {
      put_tensor<T>(ck, "optimizer.m." + items[i].name, items[i].tensor.shape(), std::span<const T>(opt->m[i]));
      put_tensor<T>(ck, "optimizer.v." + items[i].name, items[i].tensor.shape(), std::span<const T>(opt->v[i]));
    }
  }
  return ck;
}

template <typename T>
void UECheckerModel<T>::load(const ag::Checkpoint& ck, ag::OptimizerState<T>* opt) {
  auto sig = ck.entries.find(kSignatureKey);
  if (sig == ck.entries.end() || sig->second != cfg_.shape_signature()) {
    throw IncompatibleCheckpoint("checkpoint architecture does not match the model config");
  }
  auto voc = ck.entries.find(kVocabKey);
  if (voc == ck.entries.end() || nlohmann::json::parse(voc->second).get<std::vector<std::string>>() != vocab_.labels) {
    throw IncompatibleCheckpoint("checkpoint vocabulary does not match");
  }
  auto restore = [&](const std::string& name, Tensor<T>& t) {
    auto v = get_values<T>(ck, name, t.numel());
    std::copy(v.begin(), v.end(), t.mutable_data().begin());
  };
  if (!cfg_.train_embeddings) restore("embedding", embedding_);
  for (auto& p : params_.items()) restore(p.name, p.tensor);
  auto restore_bn = [&](const std::string& name, ag::BatchNormState<T>& s) {
    s.running_mean = get_values<T>(ck, name + ".running_mean", s.running_mean.size());
    s.running_var = get_values<T>(ck, name + ".running_var", s.running_var.size());
  };
  restore_bn("edge.bn", edge_.bn.state);
  restore_bn("conformer.conv.bn", conformer_.conv.bn.state);
  auto flag = ck.entries.find("model.clusters_initialized");
  clusters_ready_ = flag != ck.entries.end() && flag->second == "1";
  auto fw = ck.entries.find("model.train_forwards");
  train_forwards_ = fw == ck.entries.end() ? 0 : std::stoull(fw->second);
  if (opt) {
    *opt = ag::make_optimizer_state(params_, opt->config);
    auto step = ck.entries.find("optimizer.step");
    if (step == ck.entries.end()) return;
    opt->step = std::stoull(step->second);
    const auto& items = params_.items();
    for (std::size_t i = 0; i < items.size(); ++i) {
      opt->m[i] = get_values<T>(ck, "optimizer.m." + items[i].name, items[i].tensor.numel());
      opt->v[i] = get_values<T>(ck, "optimizer.v." + items[i].name, items[i].tensor.numel());
    }
  }
}

template <typename T>
UECheckerModel<T> UECheckerModel<T>::from_checkpoint(const ag::Checkpoint& ck, ag::OptimizerState<T>* opt) {
  const auto cfg = checkpoint_config(ck);
  auto voc = ck.entries.find(kVocabKey);
  if (voc == ck.entries.end()) throw IncompatibleCheckpoint("checkpoint carries no vocabulary");
  auto labels = nlohmann::json::parse(voc->second).get<std::vector<std::string>>();
  const auto* emb = ck.find("vocab.embedding");
  if (!emb || !emb->f64) throw IncompatibleCheckpoint("checkpoint carries no vocabulary embedding");
  UECheckerModel model(cfg, ingest::make_vocab(std::move(labels), cfg.embedding_dim, emb->f64_data));
  model.load(ck, opt);
  return model;
}

template class UECheckerModel<float>;
template class UECheckerModel<double>;

}  // namespace uechecker::model
