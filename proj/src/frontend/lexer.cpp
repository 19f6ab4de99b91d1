#include "uechecker/frontend/lexer.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <set>

namespace uechecker::frontend {

namespace {

const std::set<std::string_view>& keywords() {
  static const std::set<std::string_view> k = {
      "abstract", "anonymous", "as",        "assembly", "break",    "calldata", "catch",    "constant",
      "constructor", "continue", "contract", "delete",  "do",       "else",     "emit",     "enum",
      "error",    "event",     "external",  "fallback", "false",    "for",      "function", "if",
      "immutable", "import",   "indexed",   "interface", "internal", "is",      "library",  "mapping",
      "memory",   "modifier",  "new",       "override", "payable",  "pragma",   "private",  "public",
      "pure",     "receive",   "return",    "returns",  "revert",   "storage",  "struct",   "super",
      "this",     "true",      "try",       "type",     "unchecked", "using",   "view",     "virtual",
      "while",    "var"};
  return k;
}

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

// Longest first so maximal munch works with a linear scan.
constexpr std::array<std::string_view, 30> kOperators = {
    ">>>=", "<<=", ">>=", ">>>", "**=", "=>", "==", "!=", "<=", ">=", "&&", "||", "++", "--", "+=",
    "-=",   "*=",  "/=",  "%=",  "|=",  "&=", "^=", "<<", ">>", "**", "->", ":=", "..", "?",  "~"};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$'; }

}  // namespace

const char* token_kind_name(TokenKind k) {
  switch (k) {
    case TokenKind::kKeyword: return "keyword";
    case TokenKind::kIdentifier: return "identifier";
    case TokenKind::kPunctuation: return "punctuation";
    case TokenKind::kLiteral: return "literal";
    case TokenKind::kComment: return "comment";
  }
  return "?";
}

LexError::LexError(Kind kind, int line, int column)
    : std::runtime_error(std::string(kind == Kind::kUnterminatedString    ? "unterminated string"
                                     : kind == Kind::kUnterminatedComment ? "unterminated comment"
                                                                          : "invalid character") +
                         " at " + std::to_string(line) + ":" + std::to_string(column)),
      kind_(kind),
      line_(line),
      column_(column) {}

bool is_elementary_type(std::string_view w) {
  if (w == "address" || w == "bool" || w == "string" || w == "bytes" || w == "byte" || w == "fixed" ||
      w == "ufixed") {
    return true;
  }
  for (std::string_view prefix : {"uint", "int", "bytes"}) {
    if (w.substr(0, prefix.size()) == prefix) {
      const auto rest = w.substr(prefix.size());
      if (rest.empty() || all_digits(rest)) return true;
    }
  }
  return false;
}

std::vector<SourceToken> tokenize(std::string_view src) {
  std::vector<SourceToken> out;
  std::size_t i = 0;
  int line = 1, col = 1;

  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n && i < src.size(); ++k, ++i) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  auto emit = [&](TokenKind kind, std::size_t len) {
    out.push_back({kind, std::string(src.substr(i, len)), line, col, i});
    advance(len);
  };

  while (i < src.size()) {
    const char c = src[i];
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v') {
      advance(1);
      continue;
    }
    if (c == '/' && i + 1 < src.size() && src[i + 1] == '/') {
      std::size_t j = i;
      while (j < src.size() && src[j] != '\n') ++j;
      emit(TokenKind::kComment, j - i);
      continue;
    }
    if (c == '/' && i + 1 < src.size() && src[i + 1] == '*') {
      const auto end = src.find("*/", i + 2);
      if (end == std::string_view::npos) throw LexError(LexError::Kind::kUnterminatedComment, line, col);
      emit(TokenKind::kComment, end + 2 - i);
      continue;
    }
    if (c == '"' || c == '\'') {
      std::size_t j = i + 1;
      while (j < src.size() && src[j] != c && src[j] != '\n') j += (src[j] == '\\') ? 2 : 1;
      if (j >= src.size() || src[j] != c) throw LexError(LexError::Kind::kUnterminatedString, line, col);
      emit(TokenKind::kLiteral, j + 1 - i);
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && i + 1 < src.size() && std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
      std::size_t j = i;
      if (c == '0' && j + 1 < src.size() && (src[j + 1] == 'x' || src[j + 1] == 'X')) {
        j += 2;
        while (j < src.size() && (std::isxdigit(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
      } else {
        while (j < src.size() && (std::isdigit(static_cast<unsigned char>(src[j])) || src[j] == '_' || src[j] == '.')) {
          ++j;
        }
        if (j < src.size() && (src[j] == 'e' || src[j] == 'E')) {
          std::size_t k = j + 1;
          if (k < src.size() && src[k] == '-') ++k;
          if (k < src.size() && std::isdigit(static_cast<unsigned char>(src[k]))) {
            j = k;
            while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
          }
        }
      }
      emit(TokenKind::kLiteral, j - i);
      continue;
    }
    if (ident_start(c)) {
      std::size_t j = i;
      while (j < src.size() && ident_char(src[j])) ++j;
      const auto word = src.substr(i, j - i);
      // hex"..." and unicode"..." literals
      if ((word == "hex" || word == "unicode") && j < src.size() && (src[j] == '"' || src[j] == '\'')) {
        const char q = src[j];
        std::size_t k = j + 1;
        while (k < src.size() && src[k] != q && src[k] != '\n') k += (src[k] == '\\') ? 2 : 1;
        if (k >= src.size() || src[k] != q) throw LexError(LexError::Kind::kUnterminatedString, line, col);
        emit(TokenKind::kLiteral, k + 1 - i);
        continue;
      }
      const bool kw = keywords().count(word) || is_elementary_type(word);
      emit(kw ? TokenKind::kKeyword : TokenKind::kIdentifier, j - i);
      continue;
    }
    std::size_t len = 0;
    for (auto op : kOperators) {
      if (src.substr(i, op.size()) == op) {
        len = op.size();
        break;
      }
    }
    if (len == 0) {
      if (std::string_view("{}()[];,.:=+-*/%<>!&|^").find(c) == std::string_view::npos) {
        // Non-ASCII bytes outside strings and comments are not valid Solidity.
        throw LexError(LexError::Kind::kInvalidCharacter, line, col);
      }
      len = 1;
    }
    emit(TokenKind::kPunctuation, len);
  }
  return out;
}

}  // namespace uechecker::frontend
