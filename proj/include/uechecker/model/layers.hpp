#pragma once

// Network building blocks over packed graph batches (see graph_ops.hpp).
// Every block registers its parameters in a ParameterSet under a dotted
// prefix; initial values depend only on the seed and the parameter name.

#include <cstdint>
#include <string>
#include <vector>

#include "uechecker/autograd/graph_ops.hpp"
#include "uechecker/autograd/ops.hpp"
#include "uechecker/autograd/parameter.hpp"
#include "uechecker/ingest/sample.hpp"
#include "uechecker/model/config.hpp"

namespace uechecker::model {

using ag::Tensor;

class PairOutOfRange : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Deterministic initializers keyed by (seed, parameter name).
class Initializer {
 public:
  explicit Initializer(std::uint64_t seed) : seed_(seed) {}
  template <typename T>
  Tensor<T> uniform(const std::string& name, ag::Shape shape, double bound) const;
  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
};

template <typename T>
struct Linear {
  Tensor<T> weight;  // [in, out]
  Tensor<T> bias;    // [out] or undefined
  Linear() = default;
  /// PyTorch default: weight and bias uniform in +-1/sqrt(in).
  Linear(ag::ParameterSet<T>& ps, const Initializer& init, const std::string& name, std::size_t in, std::size_t out,
         bool with_bias = true);
  Tensor<T> operator()(const Tensor<T>& x) const { return ag::linear(x, weight, bias); }
};

template <typename T>
struct LayerNorm {
  Tensor<T> gamma, beta;
  LayerNorm() = default;
  LayerNorm(ag::ParameterSet<T>& ps, const std::string& name, std::size_t dim);
  Tensor<T> operator()(const Tensor<T>& x) const { return ag::layer_norm(x, gamma, beta); }
};

template <typename T>
struct BatchNorm {
  Tensor<T> gamma, beta;
  ag::BatchNormState<T> state;
  BatchNorm() = default;
  BatchNorm(ag::ParameterSet<T>& ps, const std::string& name, std::size_t dim);
  Tensor<T> operator()(const Tensor<T>& x, bool train) { return ag::batch_norm_1d(x, gamma, beta, state, train); }
};

/// A batch of graphs in packed form plus everything the network needs that
/// does not depend on weights.
template <typename T>
struct GraphBatch {
  ag::SegmentLayout layout;
  std::vector<std::size_t> label_ids;    // per packed row
  std::vector<std::vector<T>> relation;  // per relation: blocks L_r = I + A_r (+ A_r^2)
  std::vector<T> adjacency;              // blocks of the union of all relations, 0/1
  std::vector<ag::ScoredPair> pairs;     // edge-predictor pairs
  std::vector<int> labels;
  std::vector<std::string> names;        // optional per-graph names
};

/// Ordered pairs (i, j), i != j, of every graph. A graph with more than
/// `cap` nodes instead gets cap * (cap - 1) / 2 unordered pairs drawn
/// uniformly with `seed`, each scored in both orders.
std::vector<ag::ScoredPair> node_pairs(const ag::SegmentLayout& layout, std::size_t cap, std::uint64_t seed);

template <typename T>
GraphBatch<T> make_graph_batch(const std::vector<const ingest::GraphSample*>& samples, const ModelConfig& cfg,
                               std::uint64_t pair_seed = 0);

/// Packs a padded batch; slots with mask 0 are dropped entirely.
template <typename T>
GraphBatch<T> make_graph_batch(const ingest::Batch& batch, const ModelConfig& cfg, std::uint64_t pair_seed = 0);

/// f_edge: Linear(2C -> hidden) -> BatchNorm -> ReLU -> Linear(hidden -> 1).
template <typename T>
struct EdgePredictor {
  Linear<T> fc1, fc2;
  BatchNorm<T> bn;
  EdgePredictor() = default;
  EdgePredictor(ag::ParameterSet<T>& ps, const Initializer& init, const std::string& name, std::size_t in,
                std::size_t hidden);
  /// Raw f_edge(x_i, x_j) per pair: [P, 1].
  Tensor<T> raw(const Tensor<T>& x, const std::vector<ag::ScoredPair>& pairs, bool train);
};

/// y_ij = exp(clamp(0.5 (f(x_i, x_j) + f(x_j, x_i)), -30, 30)) per pair: [P].
template <typename T>
Tensor<T> edge_predict(EdgePredictor<T>& net, const Tensor<T>& x, const std::vector<ag::ScoredPair>& pairs,
                       bool train);

/// (A_orig + A_pred) + its transpose, block-wise. `scores` may be undefined.
template <typename T>
Tensor<T> symmetrize_adjacency(const Tensor<T>& scores, const std::vector<ag::ScoredPair>& pairs,
                               const std::vector<T>& original, const ag::SegmentLayout& layout);

/// ReLU(A_norm H W) with W [C_in, C_out] and no bias.
template <typename T>
Tensor<T> gcn_layer(const Tensor<T>& h, const Tensor<T>& a_norm, const Tensor<T>& w, const ag::SegmentLayout& layout);

/// FC(concat_r(L_r x)) for constant propagation blocks L_r.
template <typename T>
Tensor<T> relational_graph_conv(const Tensor<T>& x, const std::vector<Tensor<T>>& relation_blocks, const Linear<T>& fc,
                                const ag::SegmentLayout& layout);

/// Propagation blocks I + A_r, plus A_r^2 when `adj_sq`.
template <typename T>
std::vector<T> relation_blocks(const std::vector<std::uint8_t>& adj_r, const ag::SegmentLayout& layout, bool adj_sq);

/// Squared distances [R, K] and nearest-center assignments.
template <typename T>
std::pair<std::vector<T>, std::vector<std::size_t>> cluster_assign(const Tensor<T>& x, const Tensor<T>& centers);

/// Each row replaced by its nearest center, straight-through backward.
template <typename T>
Tensor<T> cluster_forward(const Tensor<T>& x, const Tensor<T>& centers, std::vector<std::size_t>* assignments = nullptr);

template <typename T>
struct MultiHeadAttention {
  std::size_t heads = 0, head_dim = 0;
  Linear<T> to_qkv, to_out;
  MultiHeadAttention() = default;
  MultiHeadAttention(ag::ParameterSet<T>& ps, const Initializer& init, const std::string& name, std::size_t dim,
                     std::size_t heads, std::size_t head_dim);
};

/// to_out(softmax(Q K^T / sqrt(d_k)) V) within each graph.
template <typename T>
Tensor<T> attention_forward(const MultiHeadAttention<T>& attn, const Tensor<T>& x, const ag::SegmentLayout& layout,
                            const std::vector<std::uint8_t>& key_mask = {}, std::vector<T>* probs = nullptr);

template <typename T>
struct FeedForward {
  LayerNorm<T> norm;
  Linear<T> fc1, fc2;
  Tensor<T> scale;
};

template <typename T>
struct ConvModule {
  LayerNorm<T> norm;
  Linear<T> pw1, pw2;
  Tensor<T> dw_weight, dw_bias;  // [C, K], [C]
  BatchNorm<T> bn;
  Tensor<T> scale;
};

template <typename T>
struct ConformerBlock {
  FeedForward<T> ff1, ff2;
  LayerNorm<T> attn_norm;
  MultiHeadAttention<T> attn;
  Tensor<T> attn_scale;
  ConvModule<T> conv;
  LayerNorm<T> final_norm;
  double dropout = 0.0;

  ConformerBlock() = default;
  ConformerBlock(ag::ParameterSet<T>& ps, const Initializer& init, const std::string& name, const ModelConfig& cfg);
};

/// FFN/2 -> attention -> convolution -> FFN/2 -> LayerNorm, each sublayer
/// as x + scale * sublayer(LayerNorm(x)).
template <typename T>
Tensor<T> conformer_forward(ConformerBlock<T>& block, const Tensor<T>& x, const ag::SegmentLayout& layout, bool train,
                            std::uint64_t dropout_key, std::vector<T>* attention_probs = nullptr);

}  // namespace uechecker::model
