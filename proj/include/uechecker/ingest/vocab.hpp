#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "uechecker/frontend/call_graph.hpp"

namespace uechecker::ingest {

class EmptyCorpus : public std::runtime_error {
 public:
  EmptyCorpus() : std::runtime_error("cannot build a vocabulary from an empty corpus") {}
};

inline constexpr const char* kOovLabel = "<unk>";

struct LabelVocab {
  std::map<std::string, std::size_t> index;
  std::vector<std::string> labels;  // labels[0] is the OOV entry
  std::size_t embedding_dim = 0;
  std::vector<double> embedding;  // [size() x embedding_dim], row-major

  std::size_t size() const { return labels.size(); }
  /// Index of `label`, 0 when unseen.
  std::size_t lookup(const std::string& label) const;
  const double* row(std::size_t i) const { return embedding.data() + i * embedding_dim; }
};

/// Vocabulary over the distinct node labels in sorted order after the OOV
/// entry. Embeddings are uniform in [-0.05, 0.05] drawn from `seed`.
LabelVocab build_vocab(const std::vector<frontend::CallGraph>& graphs, std::size_t embedding_dim, std::uint64_t seed);

/// Rebuilds a vocabulary from its label list (OOV first) and embedding rows.
LabelVocab make_vocab(std::vector<std::string> labels, std::size_t embedding_dim, std::vector<double> embedding);

}  // namespace uechecker::ingest
