#include "bcer/model/lexer.hpp"

#include <sstream>

namespace bcer::model {
namespace {

bool ident_start(unsigned char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }
bool ident_char(unsigned char c) { return ident_start(c) || (c >= '0' && c <= '9'); }

std::string join_expected(const std::set<std::string>& expected) {
  std::string out;
  std::size_t i = 0;
  for (const auto& e : expected) {
    if (i > 0) out += (i + 1 == expected.size()) ? " or " : ", ";
    out += e;
    ++i;
  }
  return out;
}

}  // namespace

std::string to_string(const SourcePos& pos) { return std::to_string(pos.line) + ":" + std::to_string(pos.column); }

ModelError::ModelError(Kind kind, SourcePos pos, std::string message, std::set<std::string> expected)
    : std::runtime_error(to_string(pos) + ": " + message),
      kind_(kind),
      pos_(pos),
      message_(std::move(message)),
      expected_(std::move(expected)) {}

const char* to_string(ModelError::Kind kind) {
  switch (kind) {
    case ModelError::Kind::Syntax: return "syntax";
    case ModelError::Kind::DuplicateDeclaration: return "duplicate-declaration";
    case ModelError::Kind::DuplicateField: return "duplicate-field";
    case ModelError::Kind::UnknownType: return "unknown-type";
    case ModelError::Kind::MissingIdentifier: return "missing-identifier";
    case ModelError::Kind::ReservedName: return "reserved-name";
    case ModelError::Kind::DuplicateRule: return "duplicate-rule";
    case ModelError::Kind::EmptyOperations: return "empty-operations";
  }
  return "?";
}

std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  SourcePos pos;
  std::size_t i = 0;
  auto bump = [&](std::size_t n = 1) {
    for (std::size_t k = 0; k < n && i < src.size(); ++k, ++i) {
      if (src[i] == '\n') {
        ++pos.line;
        pos.column = 1;
      } else {
        ++pos.column;
      }
    }
  };
  auto syntax = [&](SourcePos at, const std::string& msg) { throw ModelError(ModelError::Kind::Syntax, at, msg); };

  while (i < src.size()) {
    const auto c = static_cast<unsigned char>(src[i]);
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      bump();
      continue;
    }
    if (src.substr(i, 2) == "//") {
      while (i < src.size() && src[i] != '\n') bump();
      continue;
    }
    const SourcePos start = pos;
    if (ident_start(c)) {
      std::size_t j = i;
      while (j < src.size() && ident_char(static_cast<unsigned char>(src[j]))) ++j;
      out.push_back({TokenKind::Identifier, std::string(src.substr(i, j - i)), start});
      bump(j - i);
      continue;
    }
    if (c == '"') {
      std::string text;
      bump();
      while (true) {
        if (i >= src.size() || src[i] == '\n') syntax(start, "unterminated string literal");
        if (src[i] == '"') {
          bump();
          break;
        }
        if (src[i] == '\\') {
          bump();
          if (i >= src.size() || (src[i] != '"' && src[i] != '\\')) syntax(pos, "invalid escape in string literal");
        }
        text.push_back(src[i]);
        bump();
      }
      out.push_back({TokenKind::String, std::move(text), start});
      continue;
    }
    if (src.substr(i, 3) == "-->") {
      out.push_back({TokenKind::Arrow, "-->", start});
      bump(3);
      continue;
    }
    TokenKind kind;
    switch (c) {
      case '{': kind = TokenKind::LBrace; break;
      case '}': kind = TokenKind::RBrace; break;
      case ',': kind = TokenKind::Comma; break;
      case ':': kind = TokenKind::Colon; break;
      case '.': kind = TokenKind::Dot; break;
      default: {
        std::ostringstream msg;
        if (c >= 0x20 && c < 0x7f)
          msg << "unexpected character '" << static_cast<char>(c) << "'";
        else
          msg << "unexpected byte 0x" << std::hex << static_cast<int>(c);
        syntax(start, msg.str());
      }
    }
    out.push_back({kind, std::string(1, static_cast<char>(c)), start});
    bump();
  }
  out.push_back({TokenKind::End, "", pos});
  return out;
}

std::string describe(const Token& token) {
  switch (token.kind) {
    case TokenKind::Identifier: return "'" + token.text + "'";
    case TokenKind::String: return "string \"" + token.text + "\"";
    case TokenKind::End: return "end of input";
    default: return "'" + token.text + "'";
  }
}

bool TokenCursor::peek_keyword(std::string_view word) const {
  return peek().kind == TokenKind::Identifier && peek().text == word;
}

Token TokenCursor::advance() {
  Token t = tokens_[index_];
  if (t.kind != TokenKind::End) ++index_;
  return t;
}

void TokenCursor::fail_expected(std::set<std::string> expected) const {
  std::string msg = "expected " + join_expected(expected) + ", found " + describe(peek());
  throw ModelError(ModelError::Kind::Syntax, peek().pos, msg, std::move(expected));
}

Token TokenCursor::expect(TokenKind kind, const std::string& what) {
  if (peek().kind != kind) fail_expected({what});
  return advance();
}

Token TokenCursor::expect_keyword(std::string_view word) {
  if (!peek_keyword(word)) fail_expected({std::string(word)});
  return advance();
}

Token TokenCursor::expect_identifier(const std::string& what) { return expect(TokenKind::Identifier, what); }

Token TokenCursor::expect_one_of(std::initializer_list<std::string_view> words) {
  for (auto w : words)
    if (peek_keyword(w)) return advance();
  std::set<std::string> expected;
  for (auto w : words) expected.emplace(w);
  fail_expected(std::move(expected));
}

}  // namespace bcer::model
