#include "uechecker/model/layers.hpp"

#include <cmath>
#include <numeric>

#include "uechecker/autograd/rng.hpp"

namespace uechecker::model {

namespace {

std::uint64_t name_hash(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

template <typename T>
Tensor<T> constant_param(ag::ParameterSet<T>& ps, const std::string& name, ag::Shape shape, T value) {
  return ps.add(name, Tensor<T>::full(std::move(shape), value, true));
}

}  // namespace

template <typename T>
Tensor<T> Initializer::uniform(const std::string& name, ag::Shape shape, double bound) const {
  CounterRng rng(seed_, name_hash(name));
  std::vector<T> v(ag::shape_numel(shape));
  for (auto& x : v) x = static_cast<T>(rng.uniform(-bound, bound));
  return Tensor<T>::from(std::move(shape), std::move(v), true);
}

template <typename T>
Linear<T>::Linear(ag::ParameterSet<T>& ps, const Initializer& init, const std::string& name, std::size_t in,
                  std::size_t out, bool with_bias) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  weight = ps.add(name + ".weight", init.uniform<T>(name + ".weight", {in, out}, bound));
  if (with_bias) bias = ps.add(name + ".bias", init.uniform<T>(name + ".bias", {out}, bound));
}

template <typename T>
LayerNorm<T>::LayerNorm(ag::ParameterSet<T>& ps, const std::string& name, std::size_t dim) {
  gamma = constant_param<T>(ps, name + ".gamma", {dim}, T(1));
  beta = constant_param<T>(ps, name + ".beta", {dim}, T(0));
}

template <typename T>
BatchNorm<T>::BatchNorm(ag::ParameterSet<T>& ps, const std::string& name, std::size_t dim) : state(dim) {
  gamma = constant_param<T>(ps, name + ".gamma", {dim}, T(1));
  beta = constant_param<T>(ps, name + ".beta", {dim}, T(0));
}

std::vector<ag::ScoredPair> node_pairs(const ag::SegmentLayout& layout, std::size_t cap, std::uint64_t seed) {
  std::vector<ag::ScoredPair> pairs;
  auto push = [&](std::size_t b, std::size_t i, std::size_t j) {
    const std::size_t r0 = layout.begin(b);
    const std::size_t p = pairs.size();
    pairs.push_back({b, i, j, r0 + i, r0 + j, p + 1});
    pairs.push_back({b, j, i, r0 + j, r0 + i, p});
  };
  for (std::size_t b = 0; b < layout.segments(); ++b) {
    const std::size_t n = layout.size(b);
    if (n <= cap) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) push(b, i, j);
      }
      continue;
    }
    std::vector<std::pair<std::size_t, std::size_t>> all;
    all.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) all.emplace_back(i, j);
    }
    const std::size_t keep = cap * (cap - 1) / 2;
    CounterRng rng(seed, 0x70616972ULL + b);
    for (std::size_t k = 0; k < keep; ++k) {
      const std::size_t pick = k + static_cast<std::size_t>(rng.below(all.size() - k));
      std::swap(all[k], all[pick]);
    }
    std::sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep));
    for (std::size_t k = 0; k < keep; ++k) push(b, all[k].first, all[k].second);
  }
  return pairs;
}

template <typename T>
std::vector<T> relation_blocks(const std::vector<std::uint8_t>& adj_r, const ag::SegmentLayout& layout, bool adj_sq) {
  if (adj_r.size() != layout.block_elements()) throw ag::ShapeMismatch("relation_blocks", {adj_r.size()}, {layout.block_elements()});
  std::vector<T> out(adj_r.size(), T(0));
  for (std::size_t b = 0; b < layout.segments(); ++b) {
    const std::size_t n = layout.size(b);
    const std::uint8_t* a = adj_r.data() + layout.block_offset(b);
    T* o = out.data() + layout.block_offset(b);
    for (std::size_t i = 0; i < n; ++i) {
      o[i * n + i] += T(1);
      for (std::size_t j = 0; j < n; ++j) o[i * n + j] += static_cast<T>(a[i * n + j]);
    }
    if (adj_sq) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < n; ++k) {
          if (!a[i * n + k]) continue;
          for (std::size_t j = 0; j < n; ++j) o[i * n + j] += static_cast<T>(a[k * n + j]);
        }
      }
    }
  }
  return out;
}

namespace {

template <typename T>
GraphBatch<T> finish_batch(GraphBatch<T> gb, const std::vector<std::vector<std::uint8_t>>& rel, const ModelConfig& cfg,
                           std::uint64_t pair_seed) {
  gb.adjacency.assign(gb.layout.block_elements(), T(0));
  for (const auto& r : rel) {
    gb.relation.push_back(relation_blocks<T>(r, gb.layout, cfg.adj_sq));
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (r[i]) gb.adjacency[i] = T(1);
    }
  }
  gb.pairs = node_pairs(gb.layout, cfg.pair_cap, pair_seed);
  return gb;
}

}  // namespace

template <typename T>
GraphBatch<T> make_graph_batch(const std::vector<const ingest::GraphSample*>& samples, const ModelConfig& cfg,
                               std::uint64_t pair_seed) {
  GraphBatch<T> gb;
  std::vector<std::size_t> sizes;
  for (const auto* s : samples) sizes.push_back(s->num_nodes);
  gb.layout = ag::SegmentLayout::from_sizes(sizes);
  std::vector<std::vector<std::uint8_t>> rel(ingest::kRelations, std::vector<std::uint8_t>(gb.layout.block_elements()));
  for (std::size_t b = 0; b < samples.size(); ++b) {
    const auto& s = *samples[b];
    const std::size_t n = s.num_nodes;
    gb.label_ids.insert(gb.label_ids.end(), s.label_ids.begin(), s.label_ids.end());
    gb.labels.push_back(s.label);
    for (std::size_t r = 0; r < ingest::kRelations; ++r) {
      std::copy_n(s.adjacency.data() + r * n * n, n * n, rel[r].data() + gb.layout.block_offset(b));
    }
  }
  return finish_batch(std::move(gb), rel, cfg, pair_seed);
}

template <typename T>
GraphBatch<T> make_graph_batch(const ingest::Batch& batch, const ModelConfig& cfg, std::uint64_t pair_seed) {
  GraphBatch<T> gb;
  const std::size_t N = batch.nodes, R = ingest::kRelations;
  std::vector<std::vector<std::size_t>> real(batch.batch);
  std::vector<std::size_t> sizes;
  for (std::size_t b = 0; b < batch.batch; ++b) {
    for (std::size_t i = 0; i < N; ++i) {
      if (batch.mask[b * N + i]) real[b].push_back(i);
    }
    sizes.push_back(real[b].size());
  }
  gb.layout = ag::SegmentLayout::from_sizes(sizes);
  std::vector<std::vector<std::uint8_t>> rel(R, std::vector<std::uint8_t>(gb.layout.block_elements()));
  for (std::size_t b = 0; b < batch.batch; ++b) {
    const auto& idx = real[b];
    const std::size_t n = idx.size();
    gb.labels.push_back(batch.labels[b]);
    for (auto i : idx) gb.label_ids.push_back(batch.label_ids[b * N + i]);
    for (std::size_t r = 0; r < R; ++r) {
      std::uint8_t* dst = rel[r].data() + gb.layout.block_offset(b);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) dst[i * n + j] = batch.adjacency[((b * R + r) * N + idx[i]) * N + idx[j]];
      }
    }
  }
  return finish_batch(std::move(gb), rel, cfg, pair_seed);
}

template <typename T>
EdgePredictor<T>::EdgePredictor(ag::ParameterSet<T>& ps, const Initializer& init, const std::string& name,
                                std::size_t in, std::size_t hidden)
    : fc1(ps, init, name + ".fc1", 2 * in, hidden), fc2(ps, init, name + ".fc2", hidden, 1), bn(ps, name + ".bn", hidden) {}

template <typename T>
Tensor<T> EdgePredictor<T>::raw(const Tensor<T>& x, const std::vector<ag::ScoredPair>& pairs, bool train) {
  for (const auto& p : pairs) {
    if (p.row_i >= x.dim(0) || p.row_j >= x.dim(0) || p.row_i == p.row_j || p.mirror >= pairs.size()) {
      throw PairOutOfRange("edge predictor pair (" + std::to_string(p.row_i) + ", " + std::to_string(p.row_j) +
                           ") out of range");
    }
  }
  const auto h = ag::relu(bn(fc1(ag::pair_concat(x, pairs)), train));
  return fc2(h);
}

template <typename T>
Tensor<T> edge_predict(EdgePredictor<T>& net, const Tensor<T>& x, const std::vector<ag::ScoredPair>& pairs,
                       bool train) {
  if (pairs.empty()) return Tensor<T>::zeros({0});
  const auto f = net.raw(x, pairs, train);
  return ag::symmetric_pair_scores(ag::reshape(f, {pairs.size()}), pairs);
}

template <typename T>
Tensor<T> symmetrize_adjacency(const Tensor<T>& scores, const std::vector<ag::ScoredPair>& pairs,
                               const std::vector<T>& original, const ag::SegmentLayout& layout) {
  return ag::assemble_adjacency(scores, pairs, original, layout);
}

template <typename T>
Tensor<T> gcn_layer(const Tensor<T>& h, const Tensor<T>& a_norm, const Tensor<T>& w, const ag::SegmentLayout& layout) {
  if (h.rank() != 2 || w.rank() != 2 || h.dim(1) != w.dim(0)) throw ag::ShapeMismatch("gcn_layer", h.shape(), w.shape());
  return ag::relu(ag::block_propagate(a_norm, ag::matmul(h, w), layout));
}

template <typename T>
Tensor<T> relational_graph_conv(const Tensor<T>& x, const std::vector<Tensor<T>>& relation_blocks, const Linear<T>& fc,
                                const ag::SegmentLayout& layout) {
  if (relation_blocks.empty()) throw ag::ShapeMismatch("relational_graph_conv needs at least one relation");
  std::vector<Tensor<T>> parts;
  for (const auto& l : relation_blocks) parts.push_back(ag::block_propagate(l, x, layout));
  return fc(parts.size() == 1 ? parts[0] : ag::concat(parts, 1));
}

template <typename T>
std::pair<std::vector<T>, std::vector<std::size_t>> cluster_assign(const Tensor<T>& x, const Tensor<T>& centers) {
  return ag::nearest_centers(x, centers);
}

template <typename T>
Tensor<T> cluster_forward(const Tensor<T>& x, const Tensor<T>& centers, std::vector<std::size_t>* assignments) {
  return ag::cluster_straight_through(x, centers, assignments);
}

template <typename T>
MultiHeadAttention<T>::MultiHeadAttention(ag::ParameterSet<T>& ps, const Initializer& init, const std::string& name,
                                          std::size_t dim, std::size_t h, std::size_t dk)
    : heads(h),
      head_dim(dk),
      to_qkv(ps, init, name + ".to_qkv", dim, 3 * h * dk, false),
      to_out(ps, init, name + ".to_out", h * dk, dim) {}

template <typename T>
Tensor<T> attention_forward(const MultiHeadAttention<T>& attn, const Tensor<T>& x, const ag::SegmentLayout& layout,
                            const std::vector<std::uint8_t>& key_mask, std::vector<T>* probs) {
  const auto qkv = attn.to_qkv(x);
  return attn.to_out(ag::segment_attention(qkv, layout, attn.heads, attn.head_dim, key_mask, probs));
}

template <typename T>
ConformerBlock<T>::ConformerBlock(ag::ParameterSet<T>& ps, const Initializer& init, const std::string& name,
                                  const ModelConfig& cfg)
    : dropout(cfg.dropout) {
  const std::size_t c = cfg.hidden;
  auto make_ff = [&](const std::string& n) {
    FeedForward<T> f;
    f.norm = LayerNorm<T>(ps, n + ".norm", c);
    f.fc1 = Linear<T>(ps, init, n + ".fc1", c, cfg.ffn_mult * c);
    f.fc2 = Linear<T>(ps, init, n + ".fc2", cfg.ffn_mult * c, c);
    f.scale = constant_param<T>(ps, n + ".scale", {1}, T(0.5));
    return f;
  };
  ff1 = make_ff(name + ".ff1");
  attn_norm = LayerNorm<T>(ps, name + ".attn.norm", c);
  attn = MultiHeadAttention<T>(ps, init, name + ".attn", c, cfg.heads, cfg.head_dim);
  attn_scale = constant_param<T>(ps, name + ".attn.scale", {1}, T(1));
  conv.norm = LayerNorm<T>(ps, name + ".conv.norm", c);
  conv.pw1 = Linear<T>(ps, init, name + ".conv.pw1", c, 2 * c);
  const double dw_bound = 1.0 / std::sqrt(static_cast<double>(cfg.conv_kernel));
  conv.dw_weight = ps.add(name + ".conv.dw.weight", init.uniform<T>(name + ".conv.dw.weight", {c, cfg.conv_kernel}, dw_bound));
  conv.dw_bias = ps.add(name + ".conv.dw.bias", init.uniform<T>(name + ".conv.dw.bias", {c}, dw_bound));
  conv.bn = BatchNorm<T>(ps, name + ".conv.bn", c);
  conv.pw2 = Linear<T>(ps, init, name + ".conv.pw2", c, c);
  conv.scale = constant_param<T>(ps, name + ".conv.scale", {1}, T(1));
  ff2 = make_ff(name + ".ff2");
  final_norm = LayerNorm<T>(ps, name + ".norm", c);
}

template <typename T>
Tensor<T> conformer_forward(ConformerBlock<T>& blk, const Tensor<T>& x, const ag::SegmentLayout& layout, bool train,
                            std::uint64_t key, std::vector<T>* attention_probs) {
  const T p = static_cast<T>(blk.dropout);
  std::uint64_t site = 0;
  auto drop = [&](const Tensor<T>& t) { return ag::dropout(t, p, train, mix64(key ^ (++site * 0x9e3779b97f4a7c15ULL))); };
  auto ffn = [&](const FeedForward<T>& f, const Tensor<T>& in) {
    auto h = drop(ag::gelu(f.fc1(f.norm(in))));
    return ag::add(in, ag::scale_by(drop(f.fc2(h)), f.scale));
  };

  auto h = ffn(blk.ff1, x);
  h = ag::add(h, ag::scale_by(drop(attention_forward(blk.attn, blk.attn_norm(h), layout, {}, attention_probs)), blk.attn_scale));

  auto c = ag::glu(blk.conv.pw1(blk.conv.norm(h)));
  c = ag::segment_depthwise_conv(c, blk.conv.dw_weight, blk.conv.dw_bias, layout);
  c = ag::gelu(blk.conv.bn(c, train));
  h = ag::add(h, ag::scale_by(drop(blk.conv.pw2(c)), blk.conv.scale));

  h = ffn(blk.ff2, h);
  return blk.final_norm(h);
}

#define UECHECKER_INSTANTIATE_LAYERS(T)                                                                                \
  template Tensor<T> Initializer::uniform<T>(const std::string&, ag::Shape, double) const;                             \
  template struct Linear<T>;                                                                                           \
  template struct LayerNorm<T>;                                                                                        \
  template struct BatchNorm<T>;                                                                                        \
  template struct EdgePredictor<T>;                                                                                    \
  template struct MultiHeadAttention<T>;                                                                               \
  template struct ConformerBlock<T>;                                                                                   \
  template std::vector<T> relation_blocks<T>(const std::vector<std::uint8_t>&, const ag::SegmentLayout&, bool);        \
  template GraphBatch<T> make_graph_batch<T>(const std::vector<const ingest::GraphSample*>&, const ModelConfig&,       \
                                             std::uint64_t);                                                           \
  template GraphBatch<T> make_graph_batch<T>(const ingest::Batch&, const ModelConfig&, std::uint64_t);                 \
  template Tensor<T> edge_predict(EdgePredictor<T>&, const Tensor<T>&, const std::vector<ag::ScoredPair>&, bool);      \
  template Tensor<T> symmetrize_adjacency(const Tensor<T>&, const std::vector<ag::ScoredPair>&, const std::vector<T>&, \
                                          const ag::SegmentLayout&);                                                   \
  template Tensor<T> gcn_layer(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, const ag::SegmentLayout&);        \
  template Tensor<T> relational_graph_conv(const Tensor<T>&, const std::vector<Tensor<T>>&, const Linear<T>&,         \
                                           const ag::SegmentLayout&);                                                  \
  template std::pair<std::vector<T>, std::vector<std::size_t>> cluster_assign(const Tensor<T>&, const Tensor<T>&);     \
  template Tensor<T> cluster_forward(const Tensor<T>&, const Tensor<T>&, std::vector<std::size_t>*);                   \
  template Tensor<T> attention_forward(const MultiHeadAttention<T>&, const Tensor<T>&, const ag::SegmentLayout&,       \
                                       const std::vector<std::uint8_t>&, std::vector<T>*);                             \
  template Tensor<T> conformer_forward(ConformerBlock<T>&, const Tensor<T>&, const ag::SegmentLayout&, bool,           \
                                       std::uint64_t, std::vector<T>*);

UECHECKER_INSTANTIATE_LAYERS(float)
UECHECKER_INSTANTIATE_LAYERS(double)

}  // namespace uechecker::model
