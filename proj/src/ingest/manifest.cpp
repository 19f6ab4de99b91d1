#include "uechecker/ingest/manifest.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "uechecker/frontend/dot.hpp"

namespace uechecker::ingest {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<ManifestRow> read_manifest(const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw ManifestError(0, "cannot open manifest " + manifest_path);
  const fs::path base = fs::path(manifest_path).parent_path();
  std::vector<ManifestRow> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ManifestError(lineno, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ManifestError(lineno, "record is not an object");
    if (!j.contains("path") || !j["path"].is_string()) throw ManifestError(lineno, "missing string field 'path'");
    if (!j.contains("label") || !j["label"].is_number_integer()) {
      throw ManifestError(lineno, "missing integer field 'label'");
    }
    const int label = j["label"].get<int>();
    if (label != 0 && label != 1) throw ManifestError(lineno, "label must be 0 or 1");
    fs::path p = j["path"].get<std::string>();
    if (p.is_relative()) p = base / p;
    rows.push_back({p.lexically_normal().string(), label, lineno});
  }
  return rows;
}

void write_manifest(const std::string& manifest_path, const std::vector<ManifestRow>& rows) {
  std::string out;
  for (const auto& r : rows) out += json{{"path", r.path}, {"label", r.label}}.dump() + "\n";
  write_text_file(manifest_path, out);
}

Dataset load_dataset(const std::string& manifest_path) {
  Dataset d;
  for (const auto& row : read_manifest(manifest_path)) {
    if (!fs::exists(row.path)) throw ManifestError(row.row, "file not found: " + row.path);
    std::vector<std::string> warnings;
    try {
      d.graphs.push_back(frontend::parse_dot(read_text_file(row.path), &warnings));
    } catch (const frontend::DotSyntaxError& e) {
      throw ManifestError(row.row, row.path + ": " + e.what());
    }
    for (auto& w : warnings) d.warnings.push_back(row.path + ": " + w);
    d.labels.push_back(row.label);
    d.paths.push_back(row.path);
  }
  return d;
}

void write_sample_cache(const std::string& path, const LabelVocab& vocab, const std::vector<GraphSample>& samples) {
  std::string out = json{{"format", "uechecker.samples"}, {"version", 1}}.dump() + "\n";
  out += json{{"labels", vocab.labels}, {"embedding_dim", vocab.embedding_dim}, {"embedding", vocab.embedding}}.dump() +
         "\n";
  for (const auto& s : samples) {
    json edges = json::array();
    for (std::size_t r = 0; r < kRelations; ++r) {
      for (std::size_t i = 0; i < s.num_nodes; ++i) {
        for (std::size_t j = 0; j < s.num_nodes; ++j) {
          if (s.adj(r, i, j)) edges.push_back({r, i, j});
        }
      }
    }
    out += json{{"label", s.label}, {"nodes", s.node_ids}, {"label_ids", s.label_ids}, {"edges", edges}}.dump() + "\n";
  }
  write_text_file(path, out);
}

std::vector<GraphSample> read_sample_cache(const std::string& path, LabelVocab* vocab_out) {
  std::ifstream in(path);
  if (!in) throw CacheError("cannot open cache " + path);
  std::string line;
  auto next_json = [&](const char* what) {
    if (!std::getline(in, line)) throw CacheError(std::string("cache truncated before ") + what);
    try {
      return json::parse(line);
    } catch (const json::parse_error& e) {
      throw CacheError(std::string("invalid cache ") + what + ": " + e.what());
    }
  };
  const json header = next_json("header");
  if (header.value("format", "") != "uechecker.samples") throw CacheError("not a sample cache: " + path);
  if (header.value("version", 0) != 1) throw CacheError("unsupported cache version");
  const json jv = next_json("vocabulary");
  LabelVocab vocab;
  try {
    vocab = make_vocab(jv.at("labels").get<std::vector<std::string>>(), jv.at("embedding_dim").get<std::size_t>(),
                       jv.at("embedding").get<std::vector<double>>());
  } catch (const std::exception& e) {
    throw CacheError(std::string("bad vocabulary record: ") + e.what());
  }
  std::vector<GraphSample> samples;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      GraphSample s;
      s.label = j.at("label").get<int>();
      s.node_ids = j.at("nodes").get<std::vector<std::string>>();
      s.label_ids = j.at("label_ids").get<std::vector<std::size_t>>();
      const std::size_t n = s.node_ids.size();
      if (s.label_ids.size() != n) throw CacheError("label_ids length mismatch");
      s.num_nodes = n;
      s.feature_dim = vocab.embedding_dim;
      s.mask.assign(n, 1);
      s.features.resize(n * vocab.embedding_dim);
      for (std::size_t i = 0; i < n; ++i) {
        if (s.label_ids[i] >= vocab.size()) throw CacheError("label id out of range");
        std::copy_n(vocab.row(s.label_ids[i]), vocab.embedding_dim, s.features.data() + i * vocab.embedding_dim);
      }
      s.adjacency.assign(kRelations * n * n, 0);
      for (const auto& e : j.at("edges")) {
        const auto r = e.at(0).get<std::size_t>(), i = e.at(1).get<std::size_t>(), k = e.at(2).get<std::size_t>();
        if (r >= kRelations || i >= n || k >= n) throw CacheError("edge out of range");
        s.adjacency[(r * n + i) * n + k] = 1;
      }
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < n; ++k) {
          if (s.adj(0, i, k) || s.adj(1, i, k)) s.adjacency_dict[i].push_back(k);
        }
      }
      samples.push_back(std::move(s));
    } catch (const CacheError&) {
      throw;
    } catch (const std::exception& e) {
      throw CacheError(std::string("bad sample record: ") + e.what());
    }
  }
  if (vocab_out) *vocab_out = std::move(vocab);
  return samples;
}

}  // namespace uechecker::ingest
