#pragma once

// Declaration-level parser for a pragmatic Solidity subset. Contract
// bodies are parsed into declarations; function bodies are only scanned
// for local variable declarations and call expressions.

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "uechecker/frontend/lexer.hpp"

namespace uechecker::frontend {

enum class ContractKind { kContract, kAbstractContract, kInterface, kLibrary };
enum class Visibility { kPublic, kExternal, kInternal, kPrivate };
enum class FunctionKind { kFunction, kConstructor, kModifier, kFallback, kReceive };
enum class CallKind { kInternal, kExternal };

const char* visibility_name(Visibility v);
const char* call_kind_name(CallKind k);

struct TokenRange {
  std::size_t begin = 0;  // index of the first body token
  std::size_t end = 0;    // one past the last body token
};

struct FunctionDecl {
  std::string contract_name;  // empty for file-level functions
  std::string function_name;  // "constructor", "fallback", "receive" for special members
  Visibility visibility = Visibility::kPublic;
  FunctionKind kind = FunctionKind::kFunction;
  std::size_t param_count = 0;
  TokenRange body_span;
  bool has_body = false;
  int line = 0;
  /// Unique graph node id, filled in by parse_contracts.
  std::string node_id;
};

/// How a call expression names its target.
enum class CalleeForm {
  kBare,      // f(...)
  kThis,      // this.f(...)
  kSuper,     // super.f(...)
  kLibrary,   // L.f(...) with L a library or an unknown type name
  kUsingFor,  // x.f(...) resolved through `using L for T`
  kMember,    // any other receiver.f(...)
};

struct CallSite {
  std::size_t caller = 0;   // index into ParsedUnit::functions
  std::string callee_expr;  // verbatim target expression without whitespace, e.g. "rewardToken.transfer"
  std::string callee_name;  // final name component, e.g. "transfer"
  std::string qualifier;    // library name for kLibrary / kUsingFor
  CalleeForm form = CalleeForm::kBare;
  CallKind kind = CallKind::kInternal;
  std::size_t arg_count = 0;
  int line = 0;
};

struct ContractDecl {
  std::string name;
  ContractKind kind = ContractKind::kContract;
  std::vector<std::string> bases;
  std::map<std::string, std::string> state_vars;  // name -> type name
  std::vector<std::pair<std::string, std::string>> using_for;  // (library, type or "*")
  std::vector<std::string> structs, enums;
  int line = 0;
};

struct ParseError {
  int line = 0;
  int column = 0;
  std::string message;
};

class ParseFailure : public std::runtime_error {
 public:
  explicit ParseFailure(const ParseError& e)
      : std::runtime_error("parse error at " + std::to_string(e.line) + ":" + std::to_string(e.column) + ": " +
                           e.message),
        error(e) {}
  ParseError error;
};

struct ParsedUnit {
  std::vector<ContractDecl> contracts;
  std::vector<FunctionDecl> functions;
  std::vector<CallSite> calls;
  std::vector<ParseError> errors;  // recovered errors
};

/// Parses a token stream. Errors inside a contract are recorded and parsing
/// resumes at the next contract-level declaration.
ParsedUnit parse_contracts(const std::vector<SourceToken>& tokens);

/// tokenize + parse_contracts.
ParsedUnit parse_source(std::string_view source);

}  // namespace uechecker::frontend
