#include "uechecker/model/config.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace uechecker::model {

const char* loss_name(LossKind k) { return k == LossKind::kBceLogits ? "bce_logits" : "cross_entropy"; }

const char* ablation_name(Ablation a) {
  switch (a) {
    case Ablation::kGcnOnly: return "gcn_only";
    case Ablation::kEdgeGcn: return "edge_gcn";
    case Ablation::kEdgeClusterGcn: return "edge_cluster_gcn";
    case Ablation::kFull: return "full";
  }
  return "?";
}

Ablation parse_ablation(const std::string& s) {
  for (auto a : {Ablation::kGcnOnly, Ablation::kEdgeGcn, Ablation::kEdgeClusterGcn, Ablation::kFull}) {
    if (s == ablation_name(a)) return a;
  }
  throw ConfigError("unknown ablation '" + s + "'");
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::size_t to_size(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError(key + ": expected an unsigned integer, got '" + v + "'");
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::string fmt(double d) {
  std::ostringstream os;
  os.precision(17);
  os << d;
  return os.str();
}

}  // namespace

void ModelConfig::validate() const {
  auto positive = [](const char* k, std::size_t v) {
    if (v == 0) throw ConfigError(std::string(k) + " must be positive");
  };
  positive("batch_size", batch_size);
  positive("embedding_dim", embedding_dim);
  positive("hidden", hidden);
  positive("edge_hidden", edge_hidden);
  positive("heads", heads);
  positive("head_dim", head_dim);
  positive("ffn_mult", ffn_mult);
  positive("clusters", clusters);
  positive("pair_cap", pair_cap);
  if (conv_kernel % 2 == 0) throw ConfigError("conv_kernel must be odd");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must be in [0, 1)");
  if (!(learning_rate >= 0.0)) throw ConfigError("learning_rate must be >= 0");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("betas must be in [0, 1)");
  if (!(adam_eps > 0.0)) throw ConfigError("adam_eps must be positive");
  if (!std::isfinite(edge_score_bias)) throw ConfigError("edge_score_bias must be finite");
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw ConfigError("val_fraction must be in (0, 1)");
}

void ModelConfig::set(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (key == "epochs") epochs = to_size(key, v);
  else if (key == "batch_size") batch_size = to_size(key, v);
  else if (key == "learning_rate") learning_rate = to_double(key, v);
  else if (key == "weight_decay") weight_decay = to_double(key, v);
  else if (key == "beta1") beta1 = to_double(key, v);
  else if (key == "beta2") beta2 = to_double(key, v);
  else if (key == "adam_eps") adam_eps = to_double(key, v);
  else if (key == "loss") {
    if (v == "cross_entropy") loss = LossKind::kCrossEntropy;
    else if (v == "bce_logits") loss = LossKind::kBceLogits;
    else throw ConfigError("loss: expected cross_entropy or bce_logits, got '" + v + "'");
  }
  else if (key == "class_weights") class_weights = to_bool(key, v);
  else if (key == "val_fraction") val_fraction = to_double(key, v);
  else if (key == "patience") patience = to_size(key, v);
  else if (key == "seed") seed = to_u64(key, v);
  else if (key == "embedding_dim") embedding_dim = to_size(key, v);
  else if (key == "hidden") hidden = to_size(key, v);
  else if (key == "edge_hidden") edge_hidden = to_size(key, v);
  else if (key == "heads") heads = to_size(key, v);
  else if (key == "head_dim") head_dim = to_size(key, v);
  else if (key == "ffn_mult") ffn_mult = to_size(key, v);
  else if (key == "conv_kernel") conv_kernel = to_size(key, v);
  else if (key == "clusters") clusters = to_size(key, v);
  else if (key == "dropout") dropout = to_double(key, v);
  else if (key == "adj_sq") adj_sq = to_bool(key, v);
  else if (key == "train_embeddings") train_embeddings = to_bool(key, v);
  else if (key == "pair_cap") pair_cap = to_size(key, v);
  else if (key == "edge_score_bias") edge_score_bias = to_double(key, v);
  else if (key == "ablation") {
    try {
      ablation = parse_ablation(v);
    } catch (const ConfigError&) {
      throw ConfigError("ablation: expected gcn_only, edge_gcn, edge_cluster_gcn or full, got '" + v + "'");
    }
  }
  else throw ConfigError("unknown config key '" + key + "'");
}

std::string ModelConfig::to_text() const {
  std::ostringstream os;
  os << "epochs=" << epochs << "\n"
     << "batch_size=" << batch_size << "\n"
     << "learning_rate=" << fmt(learning_rate) << "\n"
     << "weight_decay=" << fmt(weight_decay) << "\n"
     << "beta1=" << fmt(beta1) << "\n"
     << "beta2=" << fmt(beta2) << "\n"
     << "adam_eps=" << fmt(adam_eps) << "\n"
     << "loss=" << loss_name(loss) << "\n"
     << "class_weights=" << (class_weights ? "true" : "false") << "\n"
     << "val_fraction=" << fmt(val_fraction) << "\n"
     << "patience=" << patience << "\n"
     << "seed=" << seed << "\n"
     << "embedding_dim=" << embedding_dim << "\n"
     << "hidden=" << hidden << "\n"
     << "edge_hidden=" << edge_hidden << "\n"
     << "heads=" << heads << "\n"
     << "head_dim=" << head_dim << "\n"
     << "ffn_mult=" << ffn_mult << "\n"
     << "conv_kernel=" << conv_kernel << "\n"
     << "clusters=" << clusters << "\n"
     << "dropout=" << fmt(dropout) << "\n"
     << "adj_sq=" << (adj_sq ? "true" : "false") << "\n"
     << "train_embeddings=" << (train_embeddings ? "true" : "false") << "\n"
     << "pair_cap=" << pair_cap << "\n"
     << "edge_score_bias=" << fmt(edge_score_bias) << "\n"
     << "ablation=" << ablation_name(ablation) << "\n";
  return os.str();
}

void ModelConfig::apply_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
    try {
      set(trim(t.substr(0, eq)), t.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(lineno) + ": " + e.what());
    }
  }
}

ModelConfig ModelConfig::from_text(const std::string& text) {
  ModelConfig c;
  c.apply_text(text);
  return c;
}

std::string ModelConfig::shape_signature() const {
  std::ostringstream os;
  os << "E" << embedding_dim << "/C" << hidden << "/eh" << edge_hidden << "/h" << heads << "x" << head_dim << "/f"
     << ffn_mult << "/k" << conv_kernel << "/K" << clusters << "/out" << logits();
  return os.str();
}

}  // namespace uechecker::model
