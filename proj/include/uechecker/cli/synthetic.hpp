#pragma once

// Synthetic call-graph corpus modeled on the unchecked-transfer pattern:
// a function calls an external token method and nothing checks the result.
//
// Graph structure: internal function nodes form a random call tree with
// extra edges. Some functions make external calls to leaf nodes. Every
// external-call source in a negative graph has a dedicated check node
// (label in kCheckLabels) reached by an internal edge; a positive graph
// has at least one external-call source without one. Decoy check nodes
// hang off non-calling functions in both classes.

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "uechecker/frontend/call_graph.hpp"

namespace uechecker::cli {

inline constexpr std::array<const char*, 3> kCheckLabels = {"require_check", "if_check", "assert_check"};

struct SyntheticSpec {
  std::size_t count = 500;
  std::size_t min_nodes = 5;
  std::size_t max_nodes = 40;
  double external_prob = 0.3;  // per function, chance of making an external call
  double motif_prob = 0.5;     // chance a graph is positive
  std::uint64_t seed = 0;
  /// Exactly round(count * motif_prob) positives, in seeded random order.
  bool exact_balance = false;

  void validate() const;  // throws std::invalid_argument
};

struct SyntheticGraph {
  frontend::CallGraph graph;
  int label = 0;
};

std::vector<SyntheticGraph> generate_synthetic(const SyntheticSpec& spec);

/// Writes graph_NNNN.dot files and manifest.jsonl into `out_dir`.
/// Returns the manifest path.
std::string write_synthetic_corpus(const std::vector<SyntheticGraph>& corpus, const std::string& out_dir);

}  // namespace uechecker::cli
