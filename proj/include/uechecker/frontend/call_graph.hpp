#pragma once

#include <string>
#include <vector>

#include "uechecker/frontend/parser.hpp"

namespace uechecker::frontend {

struct GraphNode {
  std::string id;
  std::string label;
  auto operator<=>(const GraphNode&) const = default;
};

struct GraphEdge {
  std::string src;
  std::string dst;
  CallKind kind = CallKind::kInternal;
  auto operator<=>(const GraphEdge&) const = default;
};

struct CallGraph {
  std::vector<GraphNode> nodes;
  std::vector<GraphEdge> edges;

  /// Sorts nodes by id and edges by (src, dst, kind) and drops duplicates.
  /// Duplicate node ids keep the first label seen.
  void canonicalize();
  /// Throws std::invalid_argument on duplicate ids or dangling endpoints.
  void validate() const;
  std::size_t external_edge_count() const;
  bool operator==(const CallGraph&) const = default;
};

/// Links parsed units of one project and builds the call graph. Bare and
/// super calls resolve through base contracts across all units; callees
/// that do not resolve become leaf nodes named by the callee expression.
CallGraph build_call_graph(const std::vector<ParsedUnit>& units);

struct SourceFile {
  std::string path;
  std::string content;
};

struct FileDiagnostic {
  std::string path;
  int line = 0;
  int column = 0;
  std::string message;
};

struct ExtractResult {
  CallGraph graph;
  std::vector<FileDiagnostic> diagnostics;
};

/// Tokenizes and parses every file (in path order) and links them into one
/// graph. Lexer failures drop the file; parse errors are recovered. Both are
/// reported as diagnostics.
ExtractResult extract_project(std::vector<SourceFile> files);

}  // namespace uechecker::frontend
