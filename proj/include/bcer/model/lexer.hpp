#pragma once

#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace bcer::model {

struct SourcePos {
  int line = 1;
  int column = 1;

  friend bool operator==(const SourcePos&, const SourcePos&) = default;
};

std::string to_string(const SourcePos& pos);

class ModelError : public std::runtime_error {
 public:
  enum class Kind {
    Syntax,
    DuplicateDeclaration,
    DuplicateField,
    UnknownType,
    MissingIdentifier,
    ReservedName,
    DuplicateRule,
    EmptyOperations,
  };

  ModelError(Kind kind, SourcePos pos, std::string message, std::set<std::string> expected = {});

  Kind kind() const { return kind_; }
  const SourcePos& pos() const { return pos_; }
  /// Human message without the position prefix.
  const std::string& message() const { return message_; }
  /// Token descriptions that would have been accepted (syntax errors only).
  const std::set<std::string>& expected() const { return expected_; }

 private:
  Kind kind_;
  SourcePos pos_;
  std::string message_;
  std::set<std::string> expected_;
};

const char* to_string(ModelError::Kind kind);

enum class TokenKind { Identifier, String, Arrow, LBrace, RBrace, Comma, Colon, Dot, End };

struct Token {
  TokenKind kind = TokenKind::End;
  std::string text;
  SourcePos pos;
};

/// Shared tokenizer for model and ACL sources. `//` comments run to end of line.
std::vector<Token> tokenize(std::string_view source);

std::string describe(const Token& token);

/// Cursor over a token stream with expectation helpers that raise
/// positioned syntax errors.
class TokenCursor {
 public:
  explicit TokenCursor(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

  const Token& peek() const { return tokens_[index_]; }
  bool at_end() const { return peek().kind == TokenKind::End; }
  bool peek_keyword(std::string_view word) const;
  Token advance();

  Token expect(TokenKind kind, const std::string& what);
  Token expect_keyword(std::string_view word);
  Token expect_identifier(const std::string& what = "identifier");
  /// Consumes one of `words`, or fails listing all of them as expected.
  Token expect_one_of(std::initializer_list<std::string_view> words);

  [[noreturn]] void fail_expected(std::set<std::string> expected) const;

 private:
  std::vector<Token> tokens_;
  std::size_t index_ = 0;
};

}  // namespace bcer::model
