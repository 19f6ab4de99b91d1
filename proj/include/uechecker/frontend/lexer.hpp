#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace uechecker::frontend {

enum class TokenKind { kKeyword, kIdentifier, kPunctuation, kLiteral, kComment };

const char* token_kind_name(TokenKind k);

struct SourceToken {
  TokenKind kind = TokenKind::kPunctuation;
  std::string text;
  int line = 1;
  int column = 1;
  /// Byte offset of the first character in the source.
  std::size_t offset = 0;

  bool is(TokenKind k, std::string_view t) const { return kind == k && text == t; }
  bool punct(std::string_view t) const { return is(TokenKind::kPunctuation, t); }
  bool keyword(std::string_view t) const { return is(TokenKind::kKeyword, t); }
};

class LexError : public std::runtime_error {
 public:
  enum class Kind { kUnterminatedString, kUnterminatedComment, kInvalidCharacter };
  LexError(Kind kind, int line, int column);
  Kind kind() const { return kind_; }
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  Kind kind_;
  int line_, column_;
};

/// Splits Solidity source into tokens. Whitespace is dropped, comments are
/// kept. Columns count bytes from 1.
std::vector<SourceToken> tokenize(std::string_view source);

/// Solidity elementary type names (uint256, address, bytes32, ...).
bool is_elementary_type(std::string_view word);

}  // namespace uechecker::frontend
