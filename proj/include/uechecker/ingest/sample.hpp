#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "uechecker/frontend/call_graph.hpp"
#include "uechecker/ingest/vocab.hpp"

namespace uechecker::ingest {

inline constexpr std::size_t kRelations = 2;  // 0 = internal, 1 = external

/// Numeric view of one call graph. Node i is the i-th node of the graph in
/// id order.
struct GraphSample {
  std::size_t num_nodes = 0;
  std::size_t feature_dim = 0;
  std::vector<double> features;          // [N x C]
  std::vector<std::uint8_t> adjacency;   // [R x N x N]
  std::map<std::size_t, std::vector<std::size_t>> adjacency_dict;  // out-neighbors, sorted
  std::vector<std::uint8_t> mask;        // [N]
  int label = 0;
  std::vector<std::size_t> label_ids;    // vocabulary index per node
  std::vector<std::string> node_ids;

  std::uint8_t adj(std::size_t r, std::size_t i, std::size_t j) const {
    return adjacency[(r * num_nodes + i) * num_nodes + j];
  }
  bool operator==(const GraphSample&) const = default;
};

GraphSample featurize(const frontend::CallGraph& graph, const LabelVocab& vocab, int label = 0);

/// Zero-padded batch; N is the largest node count in the batch.
struct Batch {
  std::size_t batch = 0, nodes = 0, feature_dim = 0;
  std::vector<double> features;          // [B x N x C]
  std::vector<std::uint8_t> adjacency;   // [B x R x N x N]
  std::vector<std::uint8_t> mask;        // [B x N]
  std::vector<int> labels;               // [B]
  std::vector<std::size_t> label_ids;    // [B x N], 0 on padded slots
  std::vector<std::size_t> sizes;        // real node count per graph
};

Batch pad_batch(const std::vector<GraphSample>& samples);
/// Inverse of pad_batch. Node ids and the adjacency dictionary are rebuilt
/// from the batch; node ids are not stored in a batch and come back empty
/// unless `originals` is given.
std::vector<GraphSample> unpad_batch(const Batch& batch, const std::vector<GraphSample>* originals = nullptr);

/// D^{-1/2}(A + I)D^{-1/2} for a dense N x N matrix, D the row sums of
/// A + I. With a mask, padded nodes get all-zero rows and columns.
std::vector<double> normalize_adjacency(const std::vector<double>& a, std::size_t n,
                                        const std::vector<std::uint8_t>* mask = nullptr);

}  // namespace uechecker::ingest
