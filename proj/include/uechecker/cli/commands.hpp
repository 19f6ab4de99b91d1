#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "uechecker/frontend/call_graph.hpp"

namespace uechecker::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

class NoSourcesFound : public std::runtime_error {
 public:
  explicit NoSourcesFound(const std::string& dir) : std::runtime_error("no .sol sources found under " + dir) {}
};

struct Project {
  std::string name;
  std::vector<std::string> files;  // sorted
};

/// Loose .sol files directly in `dir` form one project named after `dir`;
/// every subdirectory containing .sol files (recursively) is a project
/// named after the subdirectory. Sorted by name.
std::vector<Project> discover_projects(const std::string& dir);

frontend::ExtractResult extract_project_files(const Project& project);

/// Entry point of the `uechecker` tool. Returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace uechecker::cli
