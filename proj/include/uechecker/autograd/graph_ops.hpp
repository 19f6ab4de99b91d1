#pragma once

// Ops over a packed batch of graphs.
//
// A batch of B graphs with n_b real nodes each is stored as node rows
// [sum n_b, C]; graph b owns rows [offsets[b], offsets[b+1]). Per-graph
// square matrices (adjacencies) are stored back to back as "blocks":
// block b is n_b x n_b row-major starting at block_offset(b).

#include <cstdint>
#include <utility>
#include <vector>

#include "uechecker/autograd/tensor.hpp"

namespace uechecker::ag {

class SegmentLayout {
 public:
  SegmentLayout() : offsets_{0} {}
  static SegmentLayout from_sizes(const std::vector<std::size_t>& sizes);

  std::size_t segments() const { return offsets_.size() - 1; }
  std::size_t rows() const { return offsets_.back(); }
  std::size_t begin(std::size_t b) const { return offsets_[b]; }
  std::size_t size(std::size_t b) const { return offsets_[b + 1] - offsets_[b]; }
  std::size_t block_offset(std::size_t b) const { return block_offsets_[b]; }
  std::size_t block_elements() const { return block_offsets_.back(); }
  const std::vector<std::size_t>& offsets() const { return offsets_; }

 private:
  std::vector<std::size_t> offsets_;
  std::vector<std::size_t> block_offsets_{0};
};

/// Node pair scored by the edge predictor. `row_i`/`row_j` are packed row
/// indices; `mirror` is the index of the (j, i) pair in the same list.
struct ScoredPair {
  std::size_t segment = 0;
  std::size_t local_i = 0, local_j = 0;
  std::size_t row_i = 0, row_j = 0;
  std::size_t mirror = 0;
};

/// Rows of `table` selected by `ids`.
template <typename T>
Tensor<T> embedding_lookup(const Tensor<T>& table, const std::vector<std::size_t>& ids);

/// [P, 2C]: row p is concat(x[row_i], x[row_j]).
template <typename T>
Tensor<T> pair_concat(const Tensor<T>& x, const std::vector<ScoredPair>& pairs);

/// y_p = exp(clamp(0.5 * (f_p + f_mirror(p)), -limit, limit)) for f of shape
/// [P] or [P, 1]. Output shape [P].
template <typename T>
Tensor<T> symmetric_pair_scores(const Tensor<T>& f, const std::vector<ScoredPair>& pairs, T limit = T(30));

/// Blocks M + M^T where M = `original` + scores written at (local_i, local_j).
/// `scores` may be undefined (original adjacency only).
template <typename T>
Tensor<T> assemble_adjacency(const Tensor<T>& scores, const std::vector<ScoredPair>& pairs,
                             const std::vector<T>& original, const SegmentLayout& layout);

/// D^{-1/2} (A + I) D^{-1/2} per block, D the row sums of A + I.
template <typename T>
Tensor<T> normalize_blocks(const Tensor<T>& blocks, const SegmentLayout& layout);

/// out_b = L_b * x_b for every graph.
template <typename T>
Tensor<T> block_propagate(const Tensor<T>& blocks, const Tensor<T>& x, const SegmentLayout& layout);

/// Multi-head scaled dot-product attention within each segment.
/// qkv: [R, 3 * heads * head_dim] laid out as [Q | K | V], heads contiguous
/// inside each part. Keys with key_mask[row] == 0 are excluded (an empty
/// key_mask admits every key). A query with no admissible key outputs 0.
/// When `probs_out` is set it receives the attention weights, per segment
/// and head, as consecutive n x n row-major matrices.
template <typename T>
Tensor<T> segment_attention(const Tensor<T>& qkv, const SegmentLayout& layout, std::size_t heads,
                            std::size_t head_dim, const std::vector<std::uint8_t>& key_mask = {},
                            std::vector<T>* probs_out = nullptr);

/// Per-channel 1-D convolution along node order inside each segment, zero
/// padded at segment boundaries. weight: [C, K] with K odd, bias: [C].
template <typename T>
Tensor<T> segment_depthwise_conv(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias,
                                 const SegmentLayout& layout);

/// Squared distances [R, K] of every row to every center and the nearest
/// center per row (ties to the lowest index). Not differentiable.
template <typename T>
std::pair<std::vector<T>, std::vector<std::size_t>> nearest_centers(const Tensor<T>& x, const Tensor<T>& centers);

/// Replaces each row by its nearest center. Backward is straight-through:
/// x receives the incoming gradient unchanged and each center receives the
/// sum of the gradients of the rows assigned to it.
template <typename T>
Tensor<T> cluster_straight_through(const Tensor<T>& x, const Tensor<T>& centers,
                                   std::vector<std::size_t>* assignments_out = nullptr);

/// Column-wise max over each segment's rows: [B, C]. Empty segments pool to 0.
template <typename T>
Tensor<T> segment_max_pool(const Tensor<T>& x, const SegmentLayout& layout);

/// Gathers x[B, N, C] rows with mask[b * N + n] != 0 into [R, C].
template <typename T>
Tensor<T> pack_rows(const Tensor<T>& x, const std::vector<std::uint8_t>& mask);

/// Inverse of pack_rows: scatters packed rows back into a zero [B, N, C].
template <typename T>
Tensor<T> unpack_rows(const Tensor<T>& packed, const std::vector<std::uint8_t>& mask, std::size_t batch,
                      std::size_t nodes);

}  // namespace uechecker::ag
