#include "uechecker/frontend/parser.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace uechecker::frontend {

const char* visibility_name(Visibility v) {
  switch (v) {
    case Visibility::kPublic: return "public";
    case Visibility::kExternal: return "external";
    case Visibility::kInternal: return "internal";
    case Visibility::kPrivate: return "private";
  }
  return "?";
}

const char* call_kind_name(CallKind k) { return k == CallKind::kExternal ? "external" : "internal"; }

namespace {

const std::set<std::string>& builtin_functions() {
  static const std::set<std::string> s = {"require",   "assert",    "revert",  "keccak256", "sha256",
                                          "sha3",      "ripemd160", "ecrecover", "addmod",  "mulmod",
                                          "selfdestruct", "suicide", "blockhash", "gasleft", "blobhash"};
  return s;
}

// Members that are language builtins on arrays, bytes and the abi/string
// namespaces rather than calls into code.
const std::set<std::string>& builtin_members() {
  static const std::set<std::string> s = {"push", "pop", "concat", "encode", "encodePacked", "encodeWithSelector",
                                          "encodeWithSignature", "encodeCall", "decode", "wrap", "unwrap"};
  return s;
}

const std::set<std::string>& builtin_namespaces() {
  static const std::set<std::string> s = {"abi", "msg", "tx", "block", "string", "bytes", "type", "Math"};
  return s;
}

bool low_level_member(const std::string& name) {
  return name == "call" || name == "delegatecall" || name == "staticcall" || name == "send" || name == "transfer";
}

bool member_start(const SourceToken& t) {
  if (t.kind != TokenKind::kKeyword) return false;
  static const std::set<std::string> s = {"function", "constructor", "modifier", "fallback", "receive",
                                          "event",    "struct",      "enum",     "using",    "error"};
  return s.count(t.text) != 0;
}

bool unit_start(const SourceToken& t) {
  return t.keyword("contract") || t.keyword("interface") || t.keyword("library") || t.keyword("abstract");
}

struct Scope {
  std::map<std::string, std::string> locals;
};

class Parser {
 public:
  explicit Parser(const std::vector<SourceToken>& tokens) {
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (tokens[i].kind == TokenKind::kComment) continue;
      t_.push_back(&tokens[i]);
      orig_.push_back(i);
    }
    end_ = tokens.empty() ? SourceToken{} : tokens.back();
    end_.text = "<eof>";
    end_.kind = TokenKind::kPunctuation;
  }

  ParsedUnit run() {
    // Type names are collected first so bodies can tell casts and library
    // references from calls regardless of declaration order.
    collect_type_names();
    while (!eof()) {
      const auto& tok = peek();
      if (tok.keyword("pragma") || tok.keyword("import")) {
        skip_statement();
      } else if (unit_start(tok)) {
        try {
          parse_contract();
        } catch (const ParseFailure& e) {
          unit_.errors.push_back(e.error);
          recover(true);
        }
      } else if (tok.keyword("function")) {
        try {
          parse_function(nullptr);
        } catch (const ParseFailure& e) {
          unit_.errors.push_back(e.error);
          recover(true);
        }
      } else {
        skip_statement();
      }
    }
    for (const auto& pc : pending_) scan_body(pc.fn, pc.scope);
    assign_node_ids();
    return std::move(unit_);
  }

 private:
  struct PendingBody {
    std::size_t fn;
    Scope scope;
  };

  bool eof(std::size_t k = 0) const { return p_ + k >= t_.size(); }
  const SourceToken& peek(std::size_t k = 0) const { return eof(k) ? end_ : *t_[p_ + k]; }
  const SourceToken& at(std::size_t i) const { return i < t_.size() ? *t_[i] : end_; }

  [[noreturn]] void fail(const std::string& msg) const {
    const auto& tok = peek();
    throw ParseFailure({tok.line, tok.column, msg + ", found '" + tok.text + "'"});
  }

  void expect_punct(const char* s) {
    if (!peek().punct(s)) fail(std::string("expected '") + s + "'");
    ++p_;
  }

  std::string expect_identifier(const char* what) {
    if (peek().kind != TokenKind::kIdentifier) fail(std::string("expected ") + what);
    return t_[p_++]->text;
  }

  /// Index just past the bracket matching the opener at `i`, or t_.size().
  std::size_t match(std::size_t i) const {
    const std::string open = at(i).text;
    const std::string close = open == "(" ? ")" : open == "[" ? "]" : "}";
    int depth = 0;
    for (std::size_t k = i; k < t_.size(); ++k) {
      if (t_[k]->punct(open)) ++depth;
      if (t_[k]->punct(close) && --depth == 0) return k + 1;
    }
    return t_.size();
  }

  /// Index of the opener matching the closer at `i` (searching backwards).
  std::size_t match_back(std::size_t i, std::size_t lo) const {
    const std::string close = at(i).text;
    const std::string open = close == ")" ? "(" : close == "]" ? "[" : "{";
    int depth = 0;
    for (std::size_t k = i + 1; k-- > lo;) {
      if (t_[k]->punct(close)) ++depth;
      if (t_[k]->punct(open) && --depth == 0) return k;
    }
    return lo;
  }

  void skip_statement() {
    while (!eof()) {
      if (peek().punct(";")) {
        ++p_;
        return;
      }
      if (peek().punct("{")) {
        p_ = match(p_);
        if (peek().punct(";")) ++p_;
        return;
      }
      ++p_;
    }
  }

  /// Moves to the next declaration keyword. With `file_level` only
  /// contract-level starts are accepted.
  void recover(bool file_level) {
    if (!eof()) ++p_;
    while (!eof()) {
      const auto& tok = peek();
      if (unit_start(tok)) return;
      if (!file_level && member_start(tok)) return;
      if (file_level && tok.keyword("function") && depth_at(p_) == 0) return;
      ++p_;
    }
  }

  int depth_at(std::size_t i) const {
    int d = 0;
    for (std::size_t k = 0; k < i; ++k) {
      if (t_[k]->punct("{")) ++d;
      if (t_[k]->punct("}")) d = std::max(0, d - 1);
    }
    return d;
  }

  void collect_type_names() {
    for (std::size_t i = 0; i + 1 < t_.size(); ++i) {
      const auto& tok = *t_[i];
      const auto& next = *t_[i + 1];
      if (next.kind != TokenKind::kIdentifier) continue;
      if (tok.keyword("contract") || tok.keyword("interface")) contract_types_.insert(next.text);
      if (tok.keyword("library")) libraries_.insert(next.text);
      if (tok.keyword("struct") || tok.keyword("enum")) value_types_.insert(next.text);
    }
  }

  std::string read_type_name() {
    // elementary | mapping(...) | Ident(.Ident)*, then optional [..] suffixes
    std::string ty;
    if (peek().keyword("mapping")) {
      ++p_;
      if (!peek().punct("(")) fail("expected '(' after mapping");
      p_ = match(p_);
      ty = "mapping";
    } else if (peek().keyword("function")) {
      ++p_;
      if (peek().punct("(")) p_ = match(p_);
      ty = "function";
    } else {
      ty = peek().text;
      ++p_;
      while (peek().punct(".") && peek(1).kind == TokenKind::kIdentifier) {
        ty += "." + peek(1).text;
        p_ += 2;
      }
    }
    while (peek().punct("[")) p_ = match(p_);
    return ty;
  }

  void parse_contract() {
    ContractDecl c;
    c.line = peek().line;
    if (peek().keyword("abstract")) {
      c.kind = ContractKind::kAbstractContract;
      ++p_;
      if (!peek().keyword("contract")) fail("expected 'contract' after 'abstract'");
    } else if (peek().keyword("interface")) {
      c.kind = ContractKind::kInterface;
    } else if (peek().keyword("library")) {
      c.kind = ContractKind::kLibrary;
    }
    ++p_;
    c.name = expect_identifier("contract name");
    if (peek().keyword("is")) {
      ++p_;
      while (true) {
        std::string base = expect_identifier("base contract name");
        while (peek().punct(".") && peek(1).kind == TokenKind::kIdentifier) {
          base = peek(1).text;
          p_ += 2;
        }
        c.bases.push_back(base);
        if (peek().punct("(")) p_ = match(p_);
        if (!peek().punct(",")) break;
        ++p_;
      }
    }
    expect_punct("{");
    unit_.contracts.push_back(c);
    const std::size_t ci = unit_.contracts.size() - 1;

    while (true) {
      if (eof()) fail("expected '}' at end of contract " + c.name);
      if (peek().punct("}")) {
        ++p_;
        return;
      }
      if (unit_start(peek())) return;  // contract lost its closing brace during recovery
      try {
        parse_member(ci);
      } catch (const ParseFailure& e) {
        unit_.errors.push_back(e.error);
        recover(false);
      }
    }
  }

  void parse_member(std::size_t ci) {
    auto& c = unit_.contracts[ci];
    const auto& tok = peek();
    if (tok.keyword("function") || tok.keyword("constructor") || tok.keyword("modifier") ||
        tok.keyword("fallback") || tok.keyword("receive")) {
      // `function(...) external f;` is a function-typed state variable.
      if (tok.keyword("function") && peek(1).punct("(")) {
        const std::size_t close = match(p_ + 1);
        bool is_var = false;
        for (std::size_t k = close; k < t_.size() && !at(k).punct("{"); ++k) {
          if (at(k).punct(";")) {
            is_var = k > close && at(k - 1).kind == TokenKind::kIdentifier;
            break;
          }
        }
        if (is_var) {
          skip_statement();
          return;
        }
      }
      parse_function(&c);
      return;
    }
    if (tok.keyword("event") || tok.keyword("error")) {
      skip_statement();
      return;
    }
    if (tok.keyword("struct") || tok.keyword("enum")) {
      const bool is_struct = tok.keyword("struct");
      ++p_;
      const auto name = expect_identifier("type name");
      (is_struct ? c.structs : c.enums).push_back(name);
      if (!peek().punct("{")) fail("expected '{'");
      p_ = match(p_);
      return;
    }
    if (tok.keyword("using")) {
      ++p_;
      std::string lib;
      if (peek().punct("{")) {
        p_ = match(p_);
      } else {
        lib = expect_identifier("library name");
        while (peek().punct(".") && peek(1).kind == TokenKind::kIdentifier) {
          lib = peek(1).text;
          p_ += 2;
        }
      }
      std::string ty = "*";
      if (peek().is(TokenKind::kIdentifier, "for") || peek().keyword("for")) {
        ++p_;
        if (peek().punct("*")) {
          ++p_;
        } else {
          ty = read_type_name();
        }
      }
      while (!eof() && !peek().punct(";")) ++p_;
      expect_punct(";");
      if (!lib.empty()) c.using_for.emplace_back(lib, ty);
      return;
    }
    parse_state_var(c);
  }

  void parse_state_var(ContractDecl& c) {
    const auto start = peek();
    if (start.kind != TokenKind::kIdentifier && start.kind != TokenKind::kKeyword) fail("expected declaration");
    const std::string ty = read_type_name();
    std::string name;
    while (!eof()) {
      const auto& tok = peek();
      if (tok.punct(";") || tok.punct("=")) break;
      if (tok.punct("{") || tok.punct("}")) fail("expected ';' after state variable");
      if (tok.punct("(")) {
        p_ = match(p_);
        continue;
      }
      if (tok.kind == TokenKind::kIdentifier) name = tok.text;
      ++p_;
    }
    if (name.empty()) fail("expected state variable name");
    while (!eof() && !peek().punct(";")) {
      if (peek().punct("{") || peek().punct("(") || peek().punct("[")) {
        p_ = match(p_);
        continue;
      }
      if (peek().punct("}")) fail("expected ';' after state variable");
      ++p_;
    }
    expect_punct(";");
    c.state_vars[name] = ty;
  }

  /// Parameter list at p_ == '('. Returns (type, name) pairs; unnamed
  /// parameters get an empty name.
  std::vector<std::pair<std::string, std::string>> parse_params() {
    expect_punct("(");
    std::vector<std::pair<std::string, std::string>> params;
    if (peek().punct(")")) {
      ++p_;
      return params;
    }
    while (true) {
      if (eof() || peek().punct("{") || peek().punct("}") || peek().punct(";")) fail("expected ')'");
      const std::string ty = read_type_name();
      std::string name;
      while (!eof() && !peek().punct(",") && !peek().punct(")")) {
        if (peek().punct("{") || peek().punct("}") || peek().punct(";") || peek().punct("(")) fail("expected ')'");
        if (peek().kind == TokenKind::kIdentifier) name = peek().text;
        ++p_;
      }
      params.emplace_back(ty, name);
      if (peek().punct(")")) {
        ++p_;
        return params;
      }
      expect_punct(",");
    }
  }

  void parse_function(const ContractDecl* c) {
    FunctionDecl f;
    f.contract_name = c ? c->name : "";
    f.line = peek().line;
    const auto head = peek();
    ++p_;
    if (head.keyword("function")) {
      if (peek().punct("(")) {
        f.kind = FunctionKind::kFallback;
        f.function_name = "fallback";
        f.visibility = Visibility::kExternal;
      } else {
        if (peek().kind != TokenKind::kIdentifier && !peek().keyword("receive") && !peek().keyword("fallback")) {
          fail("expected function name");
        }
        f.function_name = t_[p_++]->text;
        f.visibility = c ? Visibility::kPublic : Visibility::kInternal;
      }
    } else if (head.keyword("constructor")) {
      f.kind = FunctionKind::kConstructor;
      f.function_name = "constructor";
    } else if (head.keyword("modifier")) {
      f.kind = FunctionKind::kModifier;
      f.function_name = expect_identifier("modifier name");
      f.visibility = Visibility::kInternal;
    } else {
      f.kind = head.keyword("fallback") ? FunctionKind::kFallback : FunctionKind::kReceive;
      f.function_name = head.text;
      f.visibility = Visibility::kExternal;
    }

    Scope scope;
    if (peek().punct("(")) {
      const auto params = parse_params();
      f.param_count = params.size();
      for (const auto& [ty, name] : params) {
        if (!name.empty()) scope.locals[name] = ty;
      }
    } else if (f.kind != FunctionKind::kModifier) {
      fail("expected '('");
    }

    while (true) {
      const auto& tok = peek();
      if (eof() || tok.punct("}") || unit_start(tok) || member_start(tok)) fail("expected '{' or ';'");
      if (tok.punct(";")) {
        ++p_;
        break;
      }
      if (tok.punct("{")) {
        const std::size_t close = match(p_);
        if (close >= t_.size() && !at(t_.size() - 1).punct("}")) fail("unterminated function body");
        f.has_body = true;
        f.body_span = {orig_[p_] + 1, orig_[close - 1]};
        body_tokens_.push_back({p_ + 1, close - 1});
        p_ = close;
        break;
      }
      if (tok.keyword("returns")) {
        ++p_;
        if (!peek().punct("(")) fail("expected '(' after returns");
        for (const auto& [ty, name] : parse_params()) {
          if (!name.empty()) scope.locals[name] = ty;
        }
        continue;
      }
      if (tok.keyword("public")) f.visibility = Visibility::kPublic;
      if (tok.keyword("external")) f.visibility = Visibility::kExternal;
      if (tok.keyword("internal")) f.visibility = Visibility::kInternal;
      if (tok.keyword("private")) f.visibility = Visibility::kPrivate;
      ++p_;
      if (peek().punct("(")) p_ = match(p_);  // modifier arguments, override(...)
    }

    unit_.functions.push_back(f);
    if (f.has_body) {
      pending_.push_back({unit_.functions.size() - 1, std::move(scope)});
    }
  }

  const ContractDecl* find_contract(const std::string& name) const {
    for (const auto& c : unit_.contracts) {
      if (c.name == name) return &c;
    }
    return nullptr;
  }

  bool is_type_start(std::size_t k) const {
    const auto& tok = at(k);
    if (tok.kind == TokenKind::kKeyword) return is_elementary_type(tok.text) || tok.text == "mapping";
    return tok.kind == TokenKind::kIdentifier;
  }

  // Recognizes `Type [..] [payable] [location] name (= | ; | , | ))` at k.
  void collect_local(std::size_t k, std::size_t end, std::map<std::string, std::string>& locals) const {
    if (!is_type_start(k)) return;
    if (k > 0 && (at(k - 1).punct(".") || at(k - 1).keyword("new"))) return;
    std::size_t q = k;
    std::string ty = at(q).text;
    if (at(q).keyword("mapping")) {
      if (!at(q + 1).punct("(")) return;
      q = match(q + 1);
      ty = "mapping";
    } else {
      ++q;
      while (at(q).punct(".") && at(q + 1).kind == TokenKind::kIdentifier) {
        ty += "." + at(q + 1).text;
        q += 2;
      }
    }
    while (q < end && at(q).punct("[")) q = match(q);
    if (at(q).keyword("payable")) ++q;
    if (at(q).keyword("memory") || at(q).keyword("storage") || at(q).keyword("calldata")) ++q;
    if (q >= end || at(q).kind != TokenKind::kIdentifier) return;
    const auto& next = at(q + 1);
    if (next.punct("=") || next.punct(";") || next.punct(",") || next.punct(")")) locals[at(q).text] = ty;
  }

  std::string join(std::size_t b, std::size_t e) const {
    std::string s;
    for (std::size_t k = b; k < e; ++k) s += at(k).text;
    return s;
  }

  /// Start index of the receiver expression ending at token `last`.
  std::size_t receiver_start(std::size_t last, std::size_t lo) const {
    std::size_t r = last;
    while (true) {
      const auto& tok = at(r);
      if (tok.punct(")")) {
        const std::size_t open = match_back(r, lo);
        if (open > lo && (at(open - 1).kind == TokenKind::kIdentifier || at(open - 1).kind == TokenKind::kKeyword) &&
            !at(open - 1).keyword("return") && !at(open - 1).keyword("if") && !at(open - 1).keyword("while")) {
          r = open - 1;
        } else {
          return open;
        }
      } else if (tok.punct("]")) {
        const std::size_t open = match_back(r, lo);
        if (open == lo) return open;
        r = open - 1;
        continue;
      } else if (tok.kind != TokenKind::kIdentifier && tok.kind != TokenKind::kKeyword) {
        return r + 1;
      }
      if (r > lo + 1 && at(r - 1).punct(".")) {
        r -= 2;
        continue;
      }
      return r;
    }
  }

  std::string using_library(const ContractDecl* c, const std::string& ty) const {
    std::vector<const ContractDecl*> order;
    if (c) order.push_back(c);
    for (const auto& other : unit_.contracts) {
      if (&other != c) order.push_back(&other);
    }
    for (const auto* cc : order) {
      for (const auto& [lib, target] : cc->using_for) {
        if (target == "*" || target == ty) return lib;
      }
      for (const auto& [lib, target] : cc->using_for) {
        // `using SafeMath for uint;` vs. a uint256 variable
        if ((target == "uint" && ty == "uint256") || (target == "uint256" && ty == "uint") ||
            (target == "int" && ty == "int256") || (target == "int256" && ty == "int")) {
          return lib;
        }
      }
    }
    return "";
  }

  std::string lookup_var(const std::string& name, const Scope& scope, const ContractDecl* c) const {
    if (auto it = scope.locals.find(name); it != scope.locals.end()) return it->second;
    std::set<std::string> seen;
    std::vector<const ContractDecl*> work;
    if (c) work.push_back(c);
    while (!work.empty()) {
      const auto* cur = work.back();
      work.pop_back();
      if (!seen.insert(cur->name).second) continue;
      if (auto it = cur->state_vars.find(name); it != cur->state_vars.end()) return it->second;
      for (const auto& b : cur->bases) {
        if (const auto* bc = find_contract(b)) work.push_back(bc);
      }
    }
    return "";
  }

  bool is_value_type(const std::string& ty) const {
    const auto dot = ty.rfind('.');
    return value_types_.count(dot == std::string::npos ? ty : ty.substr(dot + 1)) != 0;
  }

  bool function_named(const std::string& name) const {
    return std::any_of(unit_.functions.begin(), unit_.functions.end(),
                       [&](const FunctionDecl& f) { return f.function_name == name; });
  }

  static std::size_t count_args(const Parser& ps, std::size_t open) {
    const std::size_t close = ps.match(open) - 1;
    if (close == open + 1) return 0;
    std::size_t n = 1;
    int depth = 0;
    for (std::size_t k = open + 1; k < close; ++k) {
      const auto& tok = ps.at(k);
      if (tok.punct("(") || tok.punct("[") || tok.punct("{")) ++depth;
      if (tok.punct(")") || tok.punct("]") || tok.punct("}")) --depth;
      if (depth == 0 && tok.punct(",")) ++n;
    }
    return n;
  }

  void scan_body(std::size_t fn, Scope scope) {
    const auto [b, e] = body_tokens_for(fn);
    const ContractDecl* c = nullptr;
    if (!unit_.functions[fn].contract_name.empty()) c = find_contract(unit_.functions[fn].contract_name);

    for (std::size_t k = b; k < e; ++k) collect_local(k, e, scope.locals);

    for (std::size_t k = b; k < e; ++k) {
      if (!at(k).punct("(")) continue;
      std::size_t q = k - 1;
      if (q < b) continue;
      if (at(q).punct("}")) {
        // call options: target{value: v}(...)
        const std::size_t open = match_back(q, b);
        bool options = false;
        for (std::size_t m = open; m < q; ++m) options = options || at(m).punct(":");
        if (!options || open == b) continue;
        q = open - 1;
      }
      const auto& name_tok = at(q);
      if (name_tok.kind != TokenKind::kIdentifier) continue;
      const std::string name = name_tok.text;
      const bool member = q > b && at(q - 1).punct(".");
      if (!member && q > b) {
        const auto& prev = at(q - 1);
        if (prev.keyword("new") || prev.keyword("emit") || prev.keyword("revert") || prev.keyword("function") ||
            prev.keyword("event") || prev.keyword("error")) {
          continue;
        }
        // Declarations like `Type name(` do not occur; `catch Error(` does.
        if (prev.keyword("catch")) continue;
      }

      CallSite cs;
      cs.caller = fn;
      cs.callee_name = name;
      cs.line = name_tok.line;
      cs.arg_count = count_args(*this, k);

      if (!member) {
        if (builtin_functions().count(name)) continue;
        if (scope.locals.count(name) && !function_named(name)) continue;  // function-typed variable
        if (at(k + 1).punct("{")) continue;                               // struct literal
        if (contract_types_.count(name) || libraries_.count(name) || value_types_.count(name)) continue;
        // Capitalized names that are not functions of this unit are taken as
        // conversions to types declared elsewhere, e.g. IERC20(token).
        if (std::isupper(static_cast<unsigned char>(name[0])) && !function_named(name)) continue;
        cs.form = CalleeForm::kBare;
        cs.callee_expr = name;
        cs.kind = CallKind::kInternal;
        unit_.calls.push_back(cs);
        continue;
      }

      const std::size_t recv_end = q - 1;  // the '.'
      const std::size_t r = receiver_start(recv_end - 1, b);
      const std::string recv = join(r, recv_end);
      cs.callee_expr = recv + "." + name;
      if (recv.empty()) continue;
      const bool single = r + 1 == recv_end;
      const auto& root = at(r);

      if (single && root.keyword("this")) {
        cs.form = CalleeForm::kThis;
        cs.kind = CallKind::kExternal;
      } else if (single && root.keyword("super")) {
        cs.form = CalleeForm::kSuper;
        cs.kind = CallKind::kInternal;
      } else if (single && root.kind == TokenKind::kKeyword) {
        continue;  // string.concat, bytes.concat, type members
      } else if (single) {
        const std::string ty = lookup_var(root.text, scope, c);
        if (ty.empty()) {
          if (builtin_namespaces().count(root.text) || builtin_members().count(name)) continue;
          cs.form = CalleeForm::kLibrary;
          cs.qualifier = root.text;
          cs.kind = CallKind::kInternal;
        } else if (is_elementary_type(ty)) {
          if (builtin_members().count(name)) continue;
          if (ty == "address" && low_level_member(name)) {
            cs.form = CalleeForm::kMember;
            cs.kind = CallKind::kExternal;
          } else {
            cs.form = CalleeForm::kUsingFor;
            cs.qualifier = using_library(c, ty);
            cs.kind = CallKind::kInternal;
          }
        } else if (ty == "mapping" || ty == "function" || is_value_type(ty) || libraries_.count(ty)) {
          if (builtin_members().count(name)) continue;
          cs.form = CalleeForm::kUsingFor;
          cs.qualifier = using_library(c, ty);
          cs.kind = CallKind::kInternal;
        } else {
          if (builtin_members().count(name)) continue;
          cs.form = CalleeForm::kMember;
          cs.kind = CallKind::kExternal;
        }
      } else {
        if (builtin_members().count(name) && !low_level_member(name)) continue;
        cs.form = CalleeForm::kMember;
        const bool address_like = root.keyword("address") || root.keyword("payable") || recv == "msg.sender" ||
                                  recv == "tx.origin" || recv.rfind("block.coinbase", 0) == 0;
        const bool cast = root.kind == TokenKind::kIdentifier && at(r + 1).punct("(") &&
                          std::isupper(static_cast<unsigned char>(root.text[0])) && !function_named(root.text);
        std::string root_ty;
        if (root.kind == TokenKind::kIdentifier && !cast) root_ty = lookup_var(root.text, scope, c);
        const bool contract_var = !root_ty.empty() && !is_elementary_type(root_ty) && root_ty != "mapping" &&
                                  !is_value_type(root_ty) && at(r + 1).punct("[");
        if (low_level_member(name) || cast || contract_var) {
          cs.kind = CallKind::kExternal;
        } else if (address_like) {
          cs.form = CalleeForm::kUsingFor;
          cs.qualifier = using_library(c, "address");
          cs.kind = CallKind::kInternal;
        } else {
          cs.kind = CallKind::kInternal;
        }
      }
      unit_.calls.push_back(cs);
    }
  }

  std::pair<std::size_t, std::size_t> body_tokens_for(std::size_t fn) const {
    std::size_t idx = 0;
    for (std::size_t i = 0; i < unit_.functions.size() && i < fn; ++i) {
      if (unit_.functions[i].has_body) ++idx;
    }
    return body_tokens_[idx];
  }

  void assign_node_ids() {
    std::map<std::string, std::vector<std::size_t>> by_name;
    for (std::size_t i = 0; i < unit_.functions.size(); ++i) {
      const auto& f = unit_.functions[i];
      const std::string base = f.contract_name.empty() ? f.function_name : f.contract_name + "." + f.function_name;
      by_name[base].push_back(i);
    }
    for (auto& [base, idxs] : by_name) {
      if (idxs.size() == 1) {
        unit_.functions[idxs[0]].node_id = base;
        continue;
      }
      std::map<std::string, int> used;
      for (auto i : idxs) {
        std::string id = base + "/" + std::to_string(unit_.functions[i].param_count);
        if (const int n = ++used[id]; n > 1) id += "#" + std::to_string(n);
        unit_.functions[i].node_id = id;
      }
    }
  }

  std::vector<const SourceToken*> t_;
  std::vector<std::size_t> orig_;
  std::size_t p_ = 0;
  SourceToken end_;
  ParsedUnit unit_;
  std::vector<PendingBody> pending_;
  std::vector<std::pair<std::size_t, std::size_t>> body_tokens_;
  std::set<std::string> contract_types_, libraries_, value_types_;
};

}  // namespace

ParsedUnit parse_contracts(const std::vector<SourceToken>& tokens) { return Parser(tokens).run(); }

ParsedUnit parse_source(std::string_view source) { return parse_contracts(tokenize(source)); }

}  // namespace uechecker::frontend
