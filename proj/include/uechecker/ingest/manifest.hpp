#pragma once

// Dataset manifest: JSON lines {"path": "<dot file>", "label": 0|1}.
// Relative paths resolve against the manifest's directory.
//
// Sample cache: JSON lines. Line 1 is the header
//   {"format": "uechecker.samples", "version": 1}
// line 2 the vocabulary
//   {"labels": [...], "embedding_dim": C, "embedding": [...]}
// and every further line one sample
//   {"label": y, "nodes": [...], "label_ids": [...], "edges": [[r, i, j], ...]}
// Features are not stored; they are the vocabulary rows of label_ids.

#include <stdexcept>
#include <string>
#include <vector>

#include "uechecker/frontend/call_graph.hpp"
#include "uechecker/ingest/sample.hpp"

namespace uechecker::ingest {

class ManifestError : public std::runtime_error {
 public:
  ManifestError(std::size_t row, const std::string& msg)
      : std::runtime_error("manifest row " + std::to_string(row) + ": " + msg), row_(row) {}
  std::size_t row() const { return row_; }

 private:
  std::size_t row_;
};

class CacheError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ManifestRow {
  std::string path;  // as resolved
  int label = 0;
  std::size_t row = 0;  // 1-based line number
};

std::vector<ManifestRow> read_manifest(const std::string& manifest_path);
void write_manifest(const std::string& manifest_path, const std::vector<ManifestRow>& rows);

struct Dataset {
  std::vector<frontend::CallGraph> graphs;
  std::vector<int> labels;
  std::vector<std::string> paths;
  std::vector<std::string> warnings;

  std::size_t size() const { return graphs.size(); }
};

/// Reads the manifest and parses every referenced DOT file. Errors carry
/// the manifest row.
Dataset load_dataset(const std::string& manifest_path);

void write_sample_cache(const std::string& path, const LabelVocab& vocab, const std::vector<GraphSample>& samples);
std::vector<GraphSample> read_sample_cache(const std::string& path, LabelVocab* vocab_out = nullptr);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace uechecker::ingest
