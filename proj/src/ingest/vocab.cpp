#include "uechecker/ingest/vocab.hpp"

#include <set>

#include "uechecker/autograd/rng.hpp"

namespace uechecker::ingest {

std::size_t LabelVocab::lookup(const std::string& label) const {
  auto it = index.find(label);
  return it == index.end() ? 0 : it->second;
}

LabelVocab build_vocab(const std::vector<frontend::CallGraph>& graphs, std::size_t embedding_dim, std::uint64_t seed) {
  if (graphs.empty()) throw EmptyCorpus();
  if (embedding_dim == 0) throw std::invalid_argument("embedding_dim must be >= 1");
  std::set<std::string> distinct;
  for (const auto& g : graphs) {
    for (const auto& n : g.nodes) distinct.insert(n.label);
  }
  distinct.erase(kOovLabel);
  std::vector<std::string> labels = {kOovLabel};
  labels.insert(labels.end(), distinct.begin(), distinct.end());

  CounterRng rng(seed, 0x766f6361ULL);
  std::vector<double> emb(labels.size() * embedding_dim);
  for (auto& v : emb) v = rng.uniform(-0.05, 0.05);
  return make_vocab(std::move(labels), embedding_dim, std::move(emb));
}

LabelVocab make_vocab(std::vector<std::string> labels, std::size_t embedding_dim, std::vector<double> embedding) {
  if (labels.empty() || labels[0] != kOovLabel) throw std::invalid_argument("vocabulary must start with the OOV label");
  if (embedding.size() != labels.size() * embedding_dim) throw std::invalid_argument("embedding size mismatch");
  LabelVocab v;
  v.embedding_dim = embedding_dim;
  v.embedding = std::move(embedding);
  v.labels = std::move(labels);
  for (std::size_t i = 0; i < v.labels.size(); ++i) {
    if (!v.index.emplace(v.labels[i], i).second) throw std::invalid_argument("duplicate label: " + v.labels[i]);
  }
  return v;
}

}  // namespace uechecker::ingest
