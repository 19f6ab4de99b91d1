#include "uechecker/cli/commands.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "uechecker/autograd/checkpoint.hpp"
#include "uechecker/cli/synthetic.hpp"
#include "uechecker/frontend/dot.hpp"
#include "uechecker/frontend/lexer.hpp"
#include "uechecker/ingest/manifest.hpp"
#include "uechecker/model/model.hpp"
#include "uechecker/train/trainer.hpp"

namespace uechecker::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<std::string> sol_files(const fs::path& dir, bool recursive) {
  std::vector<std::string> out;
  auto take = [&](const fs::directory_entry& e) {
    if (e.is_regular_file() && e.path().extension() == ".sol") out.push_back(e.path().string());
  };
  if (recursive) {
    for (const auto& e : fs::recursive_directory_iterator(dir)) take(e);
  } else {
    for (const auto& e : fs::directory_iterator(dir)) take(e);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string abs_name(const fs::path& p) { return fs::absolute(p).lexically_normal().filename().string(); }

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs;
  std::string out;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool model_flags) {
  cmd->add_option("--out", o.out, "Output path");
  if (!model_flags) return;
  cmd->add_option("--config", o.config_path, "key=value config file")->check(CLI::ExistingFile);
  cmd->add_option("--set", o.sets, "Override one config key (key=value), repeatable");
  cmd->add_option("--seed", o.seed, "Random seed");
  cmd->add_option("--epochs", o.epochs, "Training epochs");
}

model::ModelConfig resolve_config(const CommonOptions& o) {
  model::ModelConfig cfg;
  if (!o.config_path.empty()) cfg.apply_text(ingest::read_text_file(o.config_path));
  for (const auto& kv : o.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw model::ConfigError("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (o.seed) cfg.seed = *o.seed;
  if (o.epochs) cfg.epochs = *o.epochs;
  cfg.validate();
  return cfg;
}

void require_out(const CommonOptions& o, const char* cmd) {
  if (o.out.empty()) throw UsageError(std::string(cmd) + " requires --out");
}

// ---- extract ------------------------------------------------------------

int cmd_extract(const std::string& source_dir, const CommonOptions& o, std::ostream& out, std::ostream& err) {
  require_out(o, "extract");
  const auto projects = discover_projects(source_dir);
  fs::create_directories(o.out);
  for (const auto& p : projects) {
    const auto res = extract_project_files(p);
    const std::string dot_path = (fs::path(o.out) / (p.name + ".dot")).string();
    ingest::write_text_file(dot_path, frontend::emit_dot(res.graph));
    json j;
    j["project"] = p.name;
    j["dot"] = dot_path;
    j["files"] = p.files.size();
    j["nodes"] = res.graph.nodes.size();
    j["edges"] = res.graph.edges.size();
    j["external_edges"] = res.graph.external_edge_count();
    auto diags = json::array();
    for (const auto& d : res.diagnostics) {
      diags.push_back({{"file", d.path}, {"line", d.line}, {"column", d.column}, {"message", d.message}});
      err << d.path << ":" << d.line << ":" << d.column << ": " << d.message << "\n";
    }
    j["diagnostics"] = diags;
    out << j.dump() << "\n";
  }
  return kExitOk;
}

// ---- featurize ----------------------------------------------------------

int cmd_featurize(const std::string& manifest, const CommonOptions& o, std::ostream& out, std::ostream& err) {
  require_out(o, "featurize");
  const auto cfg = resolve_config(o);
  const auto ds = ingest::load_dataset(manifest);
  for (const auto& w : ds.warnings) err << "warning: " << w << "\n";
  const auto prep = train::prepare(cfg, ds.graphs, ds.labels);
  ingest::write_sample_cache(o.out, prep.vocab, prep.samples);
  out << json{{"cache", o.out}, {"samples", prep.samples.size()}, {"vocab", prep.vocab.size()}}.dump() << "\n";
  return kExitOk;
}

// ---- train --------------------------------------------------------------

int cmd_train(const std::string& manifest, const CommonOptions& o, std::ostream& out, std::ostream& err) {
  require_out(o, "train");
  const auto cfg = resolve_config(o);
  const auto ds = ingest::load_dataset(manifest);
  for (const auto& w : ds.warnings) err << "warning: " << w << "\n";
  const auto prep = train::prepare(cfg, ds.graphs, ds.labels);

  const fs::path dir(o.out);
  fs::create_directories(dir);
  ingest::write_sample_cache((dir / "samples.jsonl").string(), prep.vocab, prep.samples);
  ingest::write_text_file((dir / "config.txt").string(), cfg.to_text());
  std::ofstream log(dir / "epochs.jsonl", std::ios::binary | std::ios::trunc);
  if (!log) throw std::runtime_error("cannot write " + (dir / "epochs.jsonl").string());

  const auto res = train::train(cfg, prep.vocab, prep.samples, [&](const train::EpochRecord& r) {
    log << r.to_json() << "\n";
    log.flush();
    err << "epoch " << r.epoch << " loss " << r.train_loss << " val_f1 " << r.val.f1() << "\n";
  });
  for (const auto& w : res.warnings) err << "warning: " << w << "\n";
  ag::save_checkpoint(res.best, (dir / "checkpoint.ueck").string());
  ag::save_checkpoint(res.last, (dir / "last.ueck").string());

  json report;
  report["best_epoch"] = res.best_epoch;
  report["epochs_run"] = res.log.size();
  report["train_graphs"] = res.split.train.size();
  report["val_graphs"] = res.split.val.size();
  report["validation"] = json::parse(train::metrics_json(res.best_val));
  ingest::write_text_file((dir / "metrics.json").string(), report.dump(2) + "\n");
  out << report.dump() << "\n";
  return kExitOk;
}

// ---- eval ---------------------------------------------------------------

int cmd_eval(const std::string& checkpoint, const std::string& manifest, const CommonOptions& o, std::ostream& out,
             std::ostream& err) {
  const auto ck = ag::load_checkpoint(checkpoint);
  const auto ds = ingest::load_dataset(manifest);
  for (const auto& w : ds.warnings) err << "warning: " << w << "\n";
  const auto m = train::evaluate(ck, ds.graphs, ds.labels);
  const auto line = train::metrics_json(m);
  if (!o.out.empty()) ingest::write_text_file(o.out, line + "\n");
  out << line << "\n";
  return kExitOk;
}

// ---- predict ------------------------------------------------------------

struct NamedGraph {
  std::string name;
  frontend::CallGraph graph;
};

std::vector<NamedGraph> predict_inputs(const std::string& input, std::ostream& err) {
  std::vector<NamedGraph> out;
  auto add_dot = [&](const fs::path& p) {
    std::vector<std::string> warnings;
    out.push_back({p.stem().string(), frontend::parse_dot(ingest::read_text_file(p.string()), &warnings)});
    for (const auto& w : warnings) err << "warning: " << p.string() << ": " << w << "\n";
  };
  const fs::path in(input);
  if (!fs::exists(in)) throw std::runtime_error("input not found: " + input);
  if (fs::is_regular_file(in)) {
    if (in.extension() == ".sol") {
      Project p{in.stem().string(), {in.string()}};
      out.push_back({p.name, extract_project_files(p).graph});
    } else {
      add_dot(in);
    }
    return out;
  }
  std::vector<fs::path> dots;
  for (const auto& e : fs::directory_iterator(in)) {
    if (e.is_regular_file() && e.path().extension() == ".dot") dots.push_back(e.path());
  }
  std::sort(dots.begin(), dots.end());
  if (!dots.empty()) {
    for (const auto& d : dots) add_dot(d);
    return out;
  }
  for (const auto& p : discover_projects(input)) out.push_back({p.name, extract_project_files(p).graph});
  return out;
}

int cmd_predict(const std::string& checkpoint, const std::string& input, const std::string& report_path,
                const CommonOptions& o, std::ostream& out, std::ostream& err) {
  const auto ck = ag::load_checkpoint(checkpoint);
  auto model = model::UECheckerModel<float>::from_checkpoint(ck);
  const auto graphs = predict_inputs(input, err);

  std::ostringstream jsonl, text;
  for (const auto& g : graphs) {
    const auto sample = ingest::featurize(g.graph, model.vocab());
    const auto gb = model::make_graph_batch<float>({&sample}, model.config(), 0);
    const auto logits = model.forward(gb, false);
    const double p1 = model.positive_probability(logits)[0];
    const bool vulnerable = model.predict_labels(logits)[0] == 1;
    json j;
    j["graph"] = g.name;
    j["verdict"] = vulnerable ? "vulnerable" : "clean";
    j["probability"] = p1;
    j["probabilities"] = {1.0 - p1, p1};
    auto calls = json::array();
    text << g.name << ": " << (vulnerable ? "VULNERABLE" : "clean") << " (p = " << p1 << ")\n";
    std::size_t externals = 0;
    for (const auto& e : g.graph.edges) {
      if (e.kind != frontend::CallKind::kExternal) continue;
      calls.push_back({{"src", e.src}, {"dst", e.dst}});
      text << "  external call: " << e.src << " -> " << e.dst << "\n";
      ++externals;
    }
    if (externals == 0) text << "  no external calls\n";
    j["external_calls"] = calls;
    jsonl << j.dump() << "\n";
  }
  if (!report_path.empty()) ingest::write_text_file(report_path, text.str());
  if (!o.out.empty()) {
    ingest::write_text_file(o.out, jsonl.str());
    out << text.str();
  } else {
    out << jsonl.str();
  }
  return kExitOk;
}

// ---- gen-synthetic ------------------------------------------------------

int cmd_gen_synthetic(const SyntheticSpec& spec, const CommonOptions& o, std::ostream& out) {
  require_out(o, "gen-synthetic");
  const auto corpus = generate_synthetic(spec);
  const auto manifest = write_synthetic_corpus(corpus, o.out);
  std::size_t pos = 0;
  for (const auto& g : corpus) pos += static_cast<std::size_t>(g.label);
  out << json{{"manifest", manifest}, {"graphs", corpus.size()}, {"positives", pos}}.dump() << "\n";
  return kExitOk;
}

}  // namespace

std::vector<Project> discover_projects(const std::string& dir) {
  const fs::path root(dir);
  if (!fs::is_directory(root)) throw NoSourcesFound(dir);
  std::vector<Project> projects;
  auto loose = sol_files(root, false);
  if (!loose.empty()) projects.push_back({abs_name(root), std::move(loose)});
  std::vector<fs::path> subdirs;
  for (const auto& e : fs::directory_iterator(root)) {
    if (e.is_directory()) subdirs.push_back(e.path());
  }
  std::sort(subdirs.begin(), subdirs.end());
  for (const auto& s : subdirs) {
    auto files = sol_files(s, true);
    if (!files.empty()) projects.push_back({s.filename().string(), std::move(files)});
  }
  if (projects.empty()) throw NoSourcesFound(dir);
  std::sort(projects.begin(), projects.end(), [](const Project& a, const Project& b) { return a.name < b.name; });
  return projects;
}

frontend::ExtractResult extract_project_files(const Project& project) {
  std::vector<frontend::SourceFile> files;
  for (const auto& f : project.files) files.push_back({f, ingest::read_text_file(f)});
  return frontend::extract_project(std::move(files));
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Call-graph extraction and unchecked-external-call classification for Solidity"};
  app.require_subcommand(1);
  CommonOptions o;

  std::string source_dir, manifest, checkpoint, input, report;
  auto* extract = app.add_subcommand("extract", "Extract one DOT call graph per project");
  extract->add_option("source_dir", source_dir, "Directory of .sol files")->required();
  add_common(extract, o, false);

  auto* featurize = app.add_subcommand("featurize", "Build the vocabulary and the sample cache");
  featurize->add_option("--manifest", manifest, "Dataset manifest (JSON lines)")->required();
  add_common(featurize, o, true);

  auto* train_cmd = app.add_subcommand("train", "Train a model; writes checkpoint, epoch log and metrics");
  train_cmd->add_option("--manifest", manifest, "Dataset manifest (JSON lines)")->required();
  add_common(train_cmd, o, true);

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a manifest");
  eval->add_option("--checkpoint", checkpoint)->required();
  eval->add_option("--manifest", manifest)->required();
  add_common(eval, o, false);

  auto* predict = app.add_subcommand("predict", "Classify DOT files or Solidity sources");
  predict->add_option("--checkpoint", checkpoint)->required();
  predict->add_option("input", input, "DOT file, directory of DOT files, or source directory")->required();
  predict->add_option("--report", report, "Write the human-readable report here");
  add_common(predict, o, false);

  SyntheticSpec spec;
  auto* gen = app.add_subcommand("gen-synthetic", "Generate a labeled synthetic DOT corpus");
  gen->add_option("--count", spec.count);
  gen->add_option("--min-nodes", spec.min_nodes);
  gen->add_option("--max-nodes", spec.max_nodes);
  gen->add_option("--external-prob", spec.external_prob);
  gen->add_option("--motif-prob", spec.motif_prob);
  gen->add_flag("--balanced", spec.exact_balance, "Exact positive count instead of independent draws");
  gen->add_option("--seed", spec.seed);
  add_common(gen, o, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*extract) return cmd_extract(source_dir, o, out, err);
    if (*featurize) return cmd_featurize(manifest, o, out, err);
    if (*train_cmd) return cmd_train(manifest, o, out, err);
    if (*eval) return cmd_eval(checkpoint, manifest, o, out, err);
    if (*predict) return cmd_predict(checkpoint, input, report, o, out, err);
    if (*gen) {
      try {
        spec.validate();
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      return cmd_gen_synthetic(spec, o, out);
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const model::ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace uechecker::cli
