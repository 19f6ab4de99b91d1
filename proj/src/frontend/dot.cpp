#include "uechecker/frontend/dot.hpp"

#include <cctype>
#include <map>
#include <optional>
#include <set>

namespace uechecker::frontend {

namespace {

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out += c;
  }
  return out + "\"";
}

struct Tok {
  enum Kind { kId, kPunct, kEnd } kind = kEnd;
  std::string text;
  int line = 1;
};

class DotLexer {
 public:
  explicit DotLexer(std::string_view s) : s_(s) {}

  Tok next() {
    skip_space();
    Tok t;
    t.line = line_;
    if (i_ >= s_.size()) return t;
    const char c = s_[i_];
    if (c == '"') {
      t.kind = Tok::kId;
      ++i_;
      while (true) {
        if (i_ >= s_.size()) throw DotSyntaxError(t.line, "unterminated string");
        const char d = s_[i_++];
        if (d == '"') break;
        if (d == '\\' && i_ < s_.size()) {
          const char e = s_[i_++];
          if (e == '"' || e == '\\') {
            t.text += e;
          } else if (e == 'n') {
            t.text += '\n';
          } else if (e == '\n') {
            ++line_;  // line continuation
          } else {
            t.text += '\\';
            t.text += e;
          }
          continue;
        }
        if (d == '\n') ++line_;
        t.text += d;
      }
      // "a" + "b" concatenation
      const auto save_i = i_;
      const auto save_line = line_;
      skip_space();
      if (i_ < s_.size() && s_[i_] == '+') {
        ++i_;
        Tok rest = next();
        if (rest.kind != Tok::kId) throw DotSyntaxError(line_, "expected string after '+'");
        t.text += rest.text;
      } else {
        i_ = save_i;
        line_ = save_line;
      }
      return t;
    }
    if (c == '<') {
      // HTML-like label: keep verbatim including nested brackets
      int depth = 0;
      std::size_t j = i_;
      for (; j < s_.size(); ++j) {
        if (s_[j] == '<') ++depth;
        if (s_[j] == '>' && --depth == 0) break;
        if (s_[j] == '\n') ++line_;
      }
      if (j >= s_.size()) throw DotSyntaxError(t.line, "unterminated HTML string");
      t.kind = Tok::kId;
      t.text = std::string(s_.substr(i_, j + 1 - i_));
      i_ = j + 1;
      return t;
    }
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-' ||
        static_cast<unsigned char>(c) >= 0x80) {
      if (c == '-' && i_ + 1 < s_.size() && (s_[i_ + 1] == '>' || s_[i_ + 1] == '-')) {
        t.kind = Tok::kPunct;
        t.text = s_.substr(i_, 2);
        i_ += 2;
        return t;
      }
      std::size_t j = i_;
      while (j < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[j])) || s_[j] == '_' || s_[j] == '.' ||
                               static_cast<unsigned char>(s_[j]) >= 0x80 ||
                               (s_[j] == '-' && j == i_))) {
        ++j;
      }
      t.kind = Tok::kId;
      t.text = std::string(s_.substr(i_, j - i_));
      i_ = j;
      return t;
    }
    if (std::string_view("{}[];,=:").find(c) != std::string_view::npos) {
      t.kind = Tok::kPunct;
      t.text = std::string(1, c);
      ++i_;
      return t;
    }
    throw DotSyntaxError(line_, std::string("unexpected character '") + c + "'");
  }

 private:
  void skip_space() {
    while (i_ < s_.size()) {
      const char c = s_[i_];
      if (c == '\n') {
        ++line_;
        ++i_;
        at_line_start_ = true;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++i_;
      } else if (c == '#' && at_line_start_) {
        while (i_ < s_.size() && s_[i_] != '\n') ++i_;
      } else if (c == '/' && i_ + 1 < s_.size() && s_[i_ + 1] == '/') {
        while (i_ < s_.size() && s_[i_] != '\n') ++i_;
      } else if (c == '/' && i_ + 1 < s_.size() && s_[i_ + 1] == '*') {
        const auto end = s_.find("*/", i_ + 2);
        if (end == std::string_view::npos) throw DotSyntaxError(line_, "unterminated comment");
        for (std::size_t k = i_; k < end; ++k) line_ += s_[k] == '\n';
        i_ = end + 2;
      } else {
        at_line_start_ = false;
        return;
      }
    }
  }

  std::string_view s_;
  std::size_t i_ = 0;
  int line_ = 1;
  bool at_line_start_ = true;
};

using Attrs = std::map<std::string, std::string>;

const std::set<std::string>& known_attributes() {
  static const std::set<std::string> s = {
      "label",    "color",      "fillcolor", "fontcolor", "fontname", "fontsize", "style",    "shape",
      "penwidth", "bgcolor",    "rankdir",   "rank",      "arrowhead", "arrowtail", "arrowsize", "dir",
      "splines",  "concentrate", "compound", "ranksep",   "nodesep",  "margin",   "width",    "height",
      "peripheries", "weight",  "constraint", "lhead",    "ltail",    "tooltip",  "URL",      "href",
      "xlabel",   "labelloc",   "labeljust", "size",      "ratio",    "center",   "overlap",  "id",
      "class",    "group",      "minlen",    "headport",  "tailport", "sep",      "esep",     "pad",
      "fixedsize", "regular",   "sides",     "orientation", "layout", "newrank",  "clusterrank"};
  return s;
}

bool internal_color(const std::string& color, const std::optional<std::string>& scoped_default) {
  if (color.empty() || color == "black" || color == "#000000" || color == "#1bc6a6") return true;
  return scoped_default && *scoped_default == color;
}

class DotParser {
 public:
  DotParser(std::string_view text, std::vector<std::string>* warnings) : lex_(text), warnings_(warnings) {
    cur_ = lex_.next();
  }

  CallGraph run() {
    if (cur_.kind == Tok::kId && lower(cur_.text) == "strict") advance();
    if (cur_.kind != Tok::kId || (lower(cur_.text) != "digraph" && lower(cur_.text) != "graph")) {
      throw DotSyntaxError(cur_.line, "expected 'digraph'");
    }
    advance();
    if (cur_.kind == Tok::kId) advance();
    expect("{");
    Scope root;
    stmt_list(root);
    expect("}");
    if (cur_.kind != Tok::kEnd) throw DotSyntaxError(cur_.line, "trailing content after graph");
    for (const auto& id : order_) g_.nodes.push_back({id, labels_.count(id) ? labels_[id] : id});
    g_.canonicalize();
    return std::move(g_);
  }

 private:
  struct Scope {
    Attrs node_defaults;
    Attrs edge_defaults;
  };

  static std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
  }

  void advance() { cur_ = lex_.next(); }
  bool is(const char* p) const { return cur_.kind == Tok::kPunct && cur_.text == p; }
  void expect(const char* p) {
    if (!is(p)) throw DotSyntaxError(cur_.line, std::string("expected '") + p + "', found '" + cur_.text + "'");
    advance();
  }

  void stmt_list(Scope& scope) {
    while (!is("}") && cur_.kind != Tok::kEnd) {
      stmt(scope);
      if (is(";")) advance();
    }
  }

  Attrs attr_list() {
    Attrs a;
    while (is("[")) {
      advance();
      while (!is("]")) {
        if (cur_.kind != Tok::kId) throw DotSyntaxError(cur_.line, "expected attribute name");
        std::string key = cur_.text;
        advance();
        std::string value = "true";
        if (is("=")) {
          advance();
          if (cur_.kind != Tok::kId) throw DotSyntaxError(cur_.line, "expected attribute value");
          value = cur_.text;
          advance();
        }
        if (!known_attributes().count(key) && warnings_) {
          warnings_->push_back("line " + std::to_string(cur_.line) + ": unknown attribute '" + key + "' ignored");
        }
        a[key] = value;
        if (is(",") || is(";")) advance();
      }
      advance();
    }
    return a;
  }

  void touch(const std::string& id, const Attrs& node_attrs) {
    if (seen_.insert(id).second) order_.push_back(id);
    if (auto it = node_attrs.find("label"); it != node_attrs.end()) labels_[id] = it->second;
  }

  // Returns node ids of an edge operand: a node id or a subgraph.
  std::vector<std::string> operand(Scope& scope) {
    if (is("{") || (cur_.kind == Tok::kId && lower(cur_.text) == "subgraph")) return subgraph(scope);
    if (cur_.kind != Tok::kId) throw DotSyntaxError(cur_.line, "expected node id, found '" + cur_.text + "'");
    std::string id = cur_.text;
    advance();
    if (is(":")) {  // port
      advance();
      if (cur_.kind == Tok::kId) advance();
      if (is(":")) {
        advance();
        if (cur_.kind == Tok::kId) advance();
      }
    }
    return {id};
  }

  std::vector<std::string> subgraph(Scope& scope) {
    if (cur_.kind == Tok::kId && lower(cur_.text) == "subgraph") {
      advance();
      if (cur_.kind == Tok::kId) advance();
    }
    expect("{");
    Scope inner = scope;
    collecting_.push_back({});
    stmt_list(inner);
    expect("}");
    std::vector<std::string> members = std::move(collecting_.back());
    collecting_.pop_back();
    if (!collecting_.empty()) {
      for (const auto& m : members) collecting_.back().push_back(m);
    }
    return members;
  }

  void note_member(const std::string& id) {
    if (!collecting_.empty()) collecting_.back().push_back(id);
  }

  void stmt(Scope& scope) {
    if (cur_.kind == Tok::kId) {
      const auto kw = lower(cur_.text);
      if (kw == "node" || kw == "edge" || kw == "graph") {
        advance();
        if (is("[")) {
          const Attrs a = attr_list();
          if (kw == "node") {
            for (const auto& [k, v] : a) {
              if (k != "label") scope.node_defaults[k] = v;
            }
          } else if (kw == "edge") {
            for (const auto& [k, v] : a) scope.edge_defaults[k] = v;
          }
          return;
        }
        // bare `node`/`edge` used as an id falls through below
        pending_id_ = kw == "graph" ? "graph" : kw;
      }
    }

    std::vector<std::string> lhs;
    if (pending_id_) {
      lhs = {*pending_id_};
      pending_id_.reset();
    } else {
      lhs = operand(scope);
    }
    if (lhs.size() == 1 && is("=")) {  // graph attribute a = b
      advance();
      if (cur_.kind != Tok::kId) throw DotSyntaxError(cur_.line, "expected value after '='");
      advance();
      return;
    }
    if (!is("->") && !is("--")) {
      const Attrs a = attr_list();
      for (const auto& id : lhs) {
        touch(id, a);
        note_member(id);
      }
      return;
    }
    std::vector<std::vector<std::string>> chain = {lhs};
    while (is("->") || is("--")) {
      advance();
      chain.push_back(operand(scope));
    }
    Attrs a = scope.edge_defaults;
    const Attrs own = attr_list();
    for (const auto& [k, v] : own) a[k] = v;
    const std::string color = a.count("color") ? a.at("color") : "";
    std::optional<std::string> scoped_default;
    if (scope.edge_defaults.count("color")) scoped_default = scope.edge_defaults.at("color");
    CallKind kind = internal_color(color, scoped_default) ? CallKind::kInternal : CallKind::kExternal;
    if (color.empty() && a.count("label") && lower(a.at("label")) == "external") kind = CallKind::kExternal;
    for (std::size_t k = 0; k + 1 < chain.size(); ++k) {
      for (const auto& s : chain[k]) {
        for (const auto& d : chain[k + 1]) {
          touch(s, {});
          touch(d, {});
          note_member(s);
          note_member(d);
          g_.edges.push_back({s, d, kind});
        }
      }
    }
  }

  DotLexer lex_;
  Tok cur_;
  std::vector<std::string>* warnings_;
  CallGraph g_;
  std::vector<std::string> order_;
  std::set<std::string> seen_;
  std::map<std::string, std::string> labels_;
  std::vector<std::vector<std::string>> collecting_;
  std::optional<std::string> pending_id_;
};

}  // namespace

std::string emit_dot(const CallGraph& graph) {
  CallGraph g = graph;
  g.canonicalize();
  std::string out = "digraph G {\n";
  for (const auto& n : g.nodes) out += "  " + quote(n.id) + " [label=" + quote(n.label) + "];\n";
  for (const auto& e : g.edges) {
    out += "  " + quote(e.src) + " -> " + quote(e.dst);
    if (e.kind == CallKind::kExternal) out += " [color=\"orange\"]";
    out += ";\n";
  }
  out += "}\n";
  return out;
}

CallGraph parse_dot(std::string_view text, std::vector<std::string>* warnings) {
  return DotParser(text, warnings).run();
}

}  // namespace uechecker::frontend
