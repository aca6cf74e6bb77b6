#pragma once

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ccl/dsl/ast.hpp"

namespace ccl::dsl {

enum class ParseErrorKind { Syntax, ForbiddenConstruct, SignatureMismatch };

inline std::string_view error_kind_name(ParseErrorKind kind) {
  switch (kind) {
    case ParseErrorKind::Syntax: return "SyntaxError";
    case ParseErrorKind::ForbiddenConstruct: return "ForbiddenConstruct";
    case ParseErrorKind::SignatureMismatch: return "SignatureMismatch";
  }
  return "?";
}

/// Diagnostic raised by the lexer, parser or signature check.
class ParseError : public std::runtime_error {
 public:
  ParseError(ParseErrorKind kind, std::string detail, SourceLoc loc)
      : std::runtime_error(std::string(error_kind_name(kind)) + " at " + std::to_string(loc.line) +
                           ":" + std::to_string(loc.column) + ": " + detail),
        kind_(kind),
        detail_(std::move(detail)),
        loc_(loc) {}

  ParseErrorKind kind() const { return kind_; }
  const std::string& detail() const { return detail_; }
  SourceLoc loc() const { return loc_; }

 private:
  ParseErrorKind kind_;
  std::string detail_;
  SourceLoc loc_;
};

enum class TokenType { Name, Int, Float, String, FString, Op, Newline, Indent, Dedent, End };

struct Token {
  TokenType type;
  std::string text;  // identifier, operator, or decoded string body
  SourceLoc loc;
  std::int64_t int_value = 0;
  double float_value = 0.0;
};

/// Splits program text into tokens with Python-style INDENT/DEDENT and implicit
/// line joining inside brackets. Comments and blank lines are dropped.
class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> tokenize() {
    indents_.assign(1, 0);
    while (pos_ < src_.size()) {
      if (at_line_start_ && depth_ == 0) {
        if (handle_line_start()) continue;
      }
      char c = src_[pos_];
      if (c == ' ' || c == '\r' || c == '\t') {
        advance();
      } else if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else if (c == '\n') {
        if (depth_ == 0) emit(TokenType::Newline, "", loc());
        advance_line();
      } else if (c == '\\') {
        fail("line continuation is not supported");
      } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        lex_name();
      } else if (std::isdigit(static_cast<unsigned char>(c)) ||
                 (c == '.' && pos_ + 1 < src_.size() &&
                  std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
        lex_number();
      } else if (c == '"' || c == '\'') {
        lex_string(TokenType::String, loc());
      } else {
        lex_op();
      }
    }
    if (depth_ != 0) fail("unclosed bracket at end of input");
    if (!tokens_.empty() && tokens_.back().type != TokenType::Newline &&
        tokens_.back().type != TokenType::Dedent && tokens_.back().type != TokenType::Indent)
      emit(TokenType::Newline, "", loc());
    while (indents_.size() > 1) {
      indents_.pop_back();
      emit(TokenType::Dedent, "", loc());
    }
    emit(TokenType::End, "", loc());
    return std::move(tokens_);
  }

 private:
  SourceLoc loc() const { return {line_, col_}; }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(ParseErrorKind::Syntax, msg, loc());
  }

  void advance() {
    ++pos_;
    ++col_;
  }
  void advance_line() {
    ++pos_;
    ++line_;
    col_ = 1;
    at_line_start_ = depth_ == 0;
  }

  void emit(TokenType type, std::string text, SourceLoc at) {
    tokens_.push_back(Token{type, std::move(text), at});
  }

  // Measures indentation of the current physical line. Returns true when the line
  // was blank or comment-only and has been consumed entirely.
  bool handle_line_start() {
    int width = 0;
    std::size_t p = pos_;
    while (p < src_.size() && (src_[p] == ' ' || src_[p] == '\t' || src_[p] == '\r')) {
      if (src_[p] == '\t') throw ParseError(ParseErrorKind::Syntax, "tab in indentation",
                                            {line_, col_ + static_cast<int>(p - pos_)});
      if (src_[p] == ' ') ++width;
      ++p;
    }
    if (p >= src_.size() || src_[p] == '\n' || src_[p] == '#') {
      while (pos_ < p) advance();
      while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      if (pos_ < src_.size()) advance_line();
      return true;
    }
    while (pos_ < p) advance();
    at_line_start_ = false;
    if (width > indents_.back()) {
      indents_.push_back(width);
      emit(TokenType::Indent, "", loc());
    } else {
      while (width < indents_.back()) {
        indents_.pop_back();
        emit(TokenType::Dedent, "", loc());
      }
      if (width != indents_.back()) fail("inconsistent dedent");
    }
    return false;
  }

  void lex_name() {
    SourceLoc at = loc();
    std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
      advance();
    std::string text(src_.substr(start, pos_ - start));
    if ((text == "f" || text == "F") && pos_ < src_.size() &&
        (src_[pos_] == '"' || src_[pos_] == '\'')) {
      lex_string(TokenType::FString, at);
      return;
    }
    if (pos_ < src_.size() && (src_[pos_] == '"' || src_[pos_] == '\''))
      fail("unsupported string prefix '" + text + "'");
    emit(TokenType::Name, std::move(text), at);
  }

  void lex_number() {
    SourceLoc at = loc();
    std::size_t start = pos_;
    bool is_float = false;
    while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) advance();
    if (pos_ < src_.size() && src_[pos_] == '.') {
      is_float = true;
      advance();
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) advance();
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      is_float = true;
      advance();
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) advance();
      if (pos_ >= src_.size() || !std::isdigit(static_cast<unsigned char>(src_[pos_])))
        fail("malformed exponent");
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) advance();
    }
    if (pos_ < src_.size() &&
        (std::isalpha(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
      fail("malformed number literal");
    std::string text(src_.substr(start, pos_ - start));
    Token tok{is_float ? TokenType::Float : TokenType::Int, text, at};
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (is_float) {
      auto [ptr, ec] = std::from_chars(first, last, tok.float_value);
      if (ec != std::errc{} || ptr != last || !std::isfinite(tok.float_value))
        throw ParseError(ParseErrorKind::Syntax, "float literal out of range", at);
    } else {
      if (text.size() > 1 && text[0] == '0')
        throw ParseError(ParseErrorKind::Syntax, "leading zeros in integer literal", at);
      auto [ptr, ec] = std::from_chars(first, last, tok.int_value);
      if (ec != std::errc{} || ptr != last)
        throw ParseError(ParseErrorKind::Syntax, "integer literal out of range", at);
    }
    tokens_.push_back(std::move(tok));
  }

  void lex_string(TokenType type, SourceLoc at) {
    char quote = src_[pos_];
    if (pos_ + 2 < src_.size() && src_[pos_ + 1] == quote && src_[pos_ + 2] == quote)
      fail("triple-quoted strings are not supported");
    advance();
    std::string body;
    while (true) {
      if (pos_ >= src_.size() || src_[pos_] == '\n')
        throw ParseError(ParseErrorKind::Syntax, "unterminated string literal", at);
      char c = src_[pos_];
      if (c == quote) {
        advance();
        break;
      }
      if (c == '\\') {
        advance();
        if (pos_ >= src_.size()) fail("unterminated string literal");
        char e = src_[pos_];
        switch (e) {
          case '\\': body += '\\'; break;
          case '\'': body += '\''; break;
          case '"': body += '"'; break;
          case 'n': body += '\n'; break;
          case 't': body += '\t'; break;
          default: fail(std::string("unsupported escape \\") + e);
        }
        advance();
        continue;
      }
      body += c;
      advance();
    }
    emit(type, std::move(body), at);
  }

  void lex_op() {
    static constexpr std::string_view two_char[] = {"==", "!=", "<=", ">=", "->", "+=", "-=",
                                                    "*=", "/=", "**", "//", "%=", "<<", ">>"};
    SourceLoc at = loc();
    for (auto op : two_char) {
      if (src_.substr(pos_, 2) == op) {
        advance();
        advance();
        emit(TokenType::Op, std::string(op), at);
        return;
      }
    }
    char c = src_[pos_];
    static constexpr std::string_view single = "()[]{},:.=<>+-*/%@;&|^~!";
    if (single.find(c) == std::string_view::npos) {
      if (static_cast<unsigned char>(c) >= 0x80) fail("non-ASCII character outside string");
      fail(std::string("unexpected character '") + c + "'");
    }
    if (c == '(' || c == '[' || c == '{') ++depth_;
    if (c == ')' || c == ']' || c == '}') {
      if (depth_ == 0) fail(std::string("unbalanced '") + c + "'");
      --depth_;
    }
    advance();
    emit(TokenType::Op, std::string(1, c), at);
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
  int depth_ = 0;
  bool at_line_start_ = true;
  std::vector<int> indents_;
  std::vector<Token> tokens_;
};

inline std::vector<Token> tokenize(std::string_view src) { return Lexer(src).tokenize(); }

}  // namespace ccl::dsl
