#include "uechecker/frontend/call_graph.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>

namespace uechecker::frontend {

void CallGraph::canonicalize() {
  std::map<std::string, std::string> labels;
  for (const auto& n : nodes) labels.emplace(n.id, n.label);
  nodes.clear();
  for (auto& [id, label] : labels) nodes.push_back({id, label});
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
}

void CallGraph::validate() const {
  std::set<std::string> ids;
  for (const auto& n : nodes) {
    if (!ids.insert(n.id).second) throw std::invalid_argument("duplicate node id: " + n.id);
  }
  for (const auto& e : edges) {
    if (!ids.count(e.src) || !ids.count(e.dst)) {
      throw std::invalid_argument("edge endpoint missing: " + e.src + " -> " + e.dst);
    }
  }
}

std::size_t CallGraph::external_edge_count() const {
  return static_cast<std::size_t>(
      std::count_if(edges.begin(), edges.end(), [](const GraphEdge& e) { return e.kind == CallKind::kExternal; }));
}

namespace {

class Linker {
 public:
  explicit Linker(const std::vector<ParsedUnit>& units) {
    for (const auto& u : units) {
      for (const auto& c : u.contracts) contracts_.emplace(c.name, &c);
      for (const auto& f : u.functions) {
        if (f.kind == FunctionKind::kConstructor || f.kind == FunctionKind::kModifier) continue;
        if (f.contract_name.empty()) {
          free_[f.function_name].push_back(&f);
        } else {
          members_[f.contract_name][f.function_name].push_back(&f);
        }
      }
    }
  }

  const FunctionDecl* in_contract(const std::string& contract, const std::string& name, std::size_t argc) const {
    auto it = members_.find(contract);
    if (it == members_.end()) return nullptr;
    auto jt = it->second.find(name);
    if (jt == it->second.end()) return nullptr;
    return pick(jt->second, argc);
  }

  /// Searches `contract` (unless skip_self) and then its bases, most
  /// derived base first.
  const FunctionDecl* in_hierarchy(const std::string& contract, const std::string& name, std::size_t argc,
                                   bool skip_self) const {
    std::set<std::string> seen;
    std::vector<std::string> order;
    linearize(contract, seen, order);
    for (std::size_t i = skip_self ? 1 : 0; i < order.size(); ++i) {
      if (const auto* f = in_contract(order[i], name, argc)) return f;
    }
    return nullptr;
  }

  const FunctionDecl* free_function(const std::string& name, std::size_t argc) const {
    auto it = free_.find(name);
    return it == free_.end() ? nullptr : pick(it->second, argc);
  }

 private:
  static const FunctionDecl* pick(const std::vector<const FunctionDecl*>& cands, std::size_t argc) {
    for (const auto* f : cands) {
      if (f->param_count == argc) return f;
    }
    return cands.empty() ? nullptr : cands.front();
  }

  void linearize(const std::string& c, std::set<std::string>& seen, std::vector<std::string>& order) const {
    if (!seen.insert(c).second) return;
    order.push_back(c);
    auto it = contracts_.find(c);
    if (it == contracts_.end()) return;
    const auto& bases = it->second->bases;
    for (auto b = bases.rbegin(); b != bases.rend(); ++b) linearize(*b, seen, order);
  }

  std::map<std::string, const ContractDecl*> contracts_;
  std::map<std::string, std::map<std::string, std::vector<const FunctionDecl*>>> members_;
  std::map<std::string, std::vector<const FunctionDecl*>> free_;
};

}  // namespace

CallGraph build_call_graph(const std::vector<ParsedUnit>& units) {
  Linker linker(units);
  CallGraph g;
  for (const auto& u : units) {
    for (const auto& f : u.functions) g.nodes.push_back({f.node_id, f.function_name});
  }
  for (const auto& u : units) {
    for (const auto& cs : u.calls) {
      const auto& caller = u.functions.at(cs.caller);
      const FunctionDecl* target = nullptr;
      std::string leaf = cs.callee_expr;
      switch (cs.form) {
        case CalleeForm::kBare:
          if (!caller.contract_name.empty()) target = linker.in_hierarchy(caller.contract_name, cs.callee_name, cs.arg_count, false);
          if (!target) target = linker.free_function(cs.callee_name, cs.arg_count);
          break;
        case CalleeForm::kThis:
          target = linker.in_hierarchy(caller.contract_name, cs.callee_name, cs.arg_count, false);
          break;
        case CalleeForm::kSuper:
          target = linker.in_hierarchy(caller.contract_name, cs.callee_name, cs.arg_count, true);
          break;
        case CalleeForm::kLibrary:
          target = linker.in_contract(cs.qualifier, cs.callee_name, cs.arg_count);
          break;
        case CalleeForm::kUsingFor:
          if (!cs.qualifier.empty()) {
            // The receiver is the implicit first argument.
            target = linker.in_contract(cs.qualifier, cs.callee_name, cs.arg_count + 1);
            leaf = cs.qualifier + "." + cs.callee_name;
          }
          break;
        case CalleeForm::kMember:
          break;
      }
      const std::string dst = target ? target->node_id : leaf;
      if (!target) g.nodes.push_back({leaf, cs.callee_name});
      g.edges.push_back({caller.node_id, dst, cs.kind});
    }
  }
  g.canonicalize();
  return g;
}

ExtractResult extract_project(std::vector<SourceFile> files) {
  std::sort(files.begin(), files.end(), [](const SourceFile& a, const SourceFile& b) { return a.path < b.path; });
  ExtractResult res;
  std::vector<ParsedUnit> units;
  for (const auto& f : files) {
    try {
      units.push_back(parse_source(f.content));
      for (const auto& e : units.back().errors) res.diagnostics.push_back({f.path, e.line, e.column, e.message});
    } catch (const LexError& e) {
      res.diagnostics.push_back({f.path, e.line(), e.column(), e.what()});
    }
  }
  res.graph = build_call_graph(units);
  return res;
}

}  // namespace uechecker::frontend
