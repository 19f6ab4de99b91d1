#include "uechecker/ingest/sample.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace uechecker::ingest {

GraphSample featurize(const frontend::CallGraph& graph, const LabelVocab& vocab, int label) {
  frontend::CallGraph g = graph;
  g.canonicalize();
  GraphSample s;
  const std::size_t n = g.nodes.size();
  const std::size_t c = vocab.embedding_dim;
  s.num_nodes = n;
  s.feature_dim = c;
  s.label = label;
  s.features.resize(n * c);
  s.adjacency.assign(kRelations * n * n, 0);
  s.mask.assign(n, 1);
  std::map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < n; ++i) {
    pos[g.nodes[i].id] = i;
    s.node_ids.push_back(g.nodes[i].id);
    const std::size_t id = vocab.lookup(g.nodes[i].label);
    s.label_ids.push_back(id);
    std::copy_n(vocab.row(id), c, s.features.data() + i * c);
  }
  for (const auto& e : g.edges) {
    const std::size_t i = pos.at(e.src), j = pos.at(e.dst);
    const std::size_t r = e.kind == frontend::CallKind::kExternal ? 1 : 0;
    s.adjacency[(r * n + i) * n + j] = 1;
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (s.adj(0, i, j) || s.adj(1, i, j)) s.adjacency_dict[i].push_back(j);
    }
  }
  return s;
}

Batch pad_batch(const std::vector<GraphSample>& samples) {
  if (samples.empty()) throw std::invalid_argument("pad_batch: empty sample list");
  Batch b;
  b.batch = samples.size();
  b.feature_dim = samples[0].feature_dim;
  for (const auto& s : samples) {
    if (s.feature_dim != b.feature_dim) throw std::invalid_argument("pad_batch: mixed feature dimensions");
    b.nodes = std::max(b.nodes, s.num_nodes);
  }
  const std::size_t N = b.nodes, C = b.feature_dim, R = kRelations;
  b.features.assign(b.batch * N * C, 0.0);
  b.adjacency.assign(b.batch * R * N * N, 0);
  b.mask.assign(b.batch * N, 0);
  b.label_ids.assign(b.batch * N, 0);
  for (std::size_t k = 0; k < b.batch; ++k) {
    const auto& s = samples[k];
    const std::size_t n = s.num_nodes;
    b.labels.push_back(s.label);
    b.sizes.push_back(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::copy_n(s.features.data() + i * C, C, b.features.data() + (k * N + i) * C);
      b.mask[k * N + i] = s.mask[i];
      b.label_ids[k * N + i] = s.label_ids[i];
      for (std::size_t r = 0; r < R; ++r) {
        for (std::size_t j = 0; j < n; ++j) b.adjacency[((k * R + r) * N + i) * N + j] = s.adj(r, i, j);
      }
    }
  }
  return b;
}

std::vector<GraphSample> unpad_batch(const Batch& b, const std::vector<GraphSample>* originals) {
  std::vector<GraphSample> out;
  const std::size_t N = b.nodes, C = b.feature_dim, R = kRelations;
  for (std::size_t k = 0; k < b.batch; ++k) {
    GraphSample s;
    const std::size_t n = b.sizes[k];
    s.num_nodes = n;
    s.feature_dim = C;
    s.label = b.labels[k];
    s.features.assign(b.features.begin() + k * N * C, b.features.begin() + (k * N + n) * C);
    s.mask.assign(b.mask.begin() + k * N, b.mask.begin() + k * N + n);
    s.label_ids.assign(b.label_ids.begin() + k * N, b.label_ids.begin() + k * N + n);
    s.adjacency.assign(R * n * n, 0);
    for (std::size_t r = 0; r < R; ++r) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) s.adjacency[(r * n + i) * n + j] = b.adjacency[((k * R + r) * N + i) * N + j];
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (s.adj(0, i, j) || s.adj(1, i, j)) s.adjacency_dict[i].push_back(j);
      }
    }
    if (originals) s.node_ids = (*originals)[k].node_ids;
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<double> normalize_adjacency(const std::vector<double>& a, std::size_t n,
                                        const std::vector<std::uint8_t>* mask) {
  if (a.size() != n * n) throw std::invalid_argument("normalize_adjacency: matrix is not N x N");
  if (mask && mask->size() != n) throw std::invalid_argument("normalize_adjacency: mask size mismatch");
  auto real = [&](std::size_t i) { return !mask || (*mask)[i] != 0; };
  std::vector<double> inv_sqrt(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!real(i)) continue;
    double d = 1.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (real(j)) d += a[i * n + j];
    }
    inv_sqrt[i] = d > 0.0 ? 1.0 / std::sqrt(d) : 0.0;
  }
  std::vector<double> out(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!real(i)) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (!real(j)) continue;
      const double m = a[i * n + j] + (i == j ? 1.0 : 0.0);
      out[i * n + j] = m * (inv_sqrt[i] * inv_sqrt[j]);
    }
  }
  return out;
}

}  // namespace uechecker::ingest
