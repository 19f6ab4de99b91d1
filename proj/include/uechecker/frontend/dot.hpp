#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "uechecker/frontend/call_graph.hpp"

namespace uechecker::frontend {

class DotSyntaxError : public std::runtime_error {
 public:
  DotSyntaxError(int line, const std::string& msg)
      : std::runtime_error("DOT syntax error at line " + std::to_string(line) + ": " + msg), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

/// Byte-deterministic DOT text: nodes then edges, both sorted, two-space
/// indent, external edges colored orange.
std::string emit_dot(const CallGraph& graph);

/// Reads this tool's DOT output and Surya-style graphs. Subgraphs are
/// flattened. An edge is internal when its effective color is absent,
/// black, Surya's internal call color or the enclosing default, and
/// external for any other color. Without a color an edge labeled
/// "external" is external. Unknown attributes are skipped and reported in
/// `warnings`. The result is canonical (see CallGraph::canonicalize).
CallGraph parse_dot(std::string_view text, std::vector<std::string>* warnings = nullptr);

}  // namespace uechecker::frontend
