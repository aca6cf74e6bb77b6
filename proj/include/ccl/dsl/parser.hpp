#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "ccl/dsl/ast.hpp"
#include "ccl/dsl/lexer.hpp"

namespace ccl::dsl {

namespace detail {

inline bool is_builtin_name(std::string_view name) {
  return name == "len" || name == "all" || name == "any" || name == "set";
}

// Keywords and Python names outside the language. Hitting one is a sandbox violation,
// not a typo, so they are reported as ForbiddenConstruct.
inline bool is_forbidden_keyword(std::string_view name) {
  static constexpr std::string_view words[] = {
      "while", "import", "from",  "def",    "class", "lambda",   "try",   "except",
      "finally", "with", "global", "nonlocal", "yield", "await", "async", "del",
      "assert", "raise", "pass", "break", "continue", "is", "None", "print",
      "exec",  "eval",   "open",  "__import__", "match", "case"};
  return std::find(std::begin(words), std::end(words), name) != std::end(words);
}

inline bool is_reserved_name(std::string_view name) {
  return is_builtin_name(name) || name == "retrieve" || name == "True" || name == "False" ||
         name == "answer" || name == "if" || name == "elif" || name == "else" || name == "for" ||
         name == "in" || name == "return" || name == "and" || name == "or" || name == "not" ||
         parse_kind(name).has_value() || is_forbidden_keyword(name);
}

}  // namespace detail

/// Recursive-descent parser for the restricted `answer(...)` language.
class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  /// Parses `def answer(name: kind, ...) -> int` followed by an optional ':'.
  std::vector<Param> parse_header_only() {
    skip_newlines();
    auto params = parse_signature();
    if (peek_op(":")) next();
    skip_newlines();
    if (peek().type != TokenType::End) syntax("unexpected text after function header");
    return params;
  }

  Program parse_program() {
    skip_newlines();
    while (peek_name("from") || peek_name("import")) {
      parse_typing_import();
      skip_newlines();
    }
    if (!peek_name("def")) syntax("expected 'def answer(...) -> int:'");
    Program program;
    program.params = parse_signature();
    expect_op(":");
    for (const auto& p : program.params) params_.insert(p.name);
    program.body = parse_suite();
    skip_newlines();
    if (peek_name("def"))
      forbidden("additional function definition", peek().loc);
    if (peek_name("from") || peek_name("import")) forbidden("import", peek().loc);
    if (peek().type != TokenType::End) syntax("unexpected statement after function body");
    resolve_names(program);
    return program;
  }

 private:
  // --- token helpers -------------------------------------------------------

  const Token& peek(std::size_t ahead = 0) const {
    std::size_t i = std::min(pos_ + ahead, toks_.size() - 1);
    return toks_[i];
  }
  const Token& next() {
    const Token& t = toks_[pos_];
    if (pos_ + 1 < toks_.size()) ++pos_;
    return t;
  }
  bool peek_op(std::string_view op, std::size_t ahead = 0) const {
    const auto& t = peek(ahead);
    return t.type == TokenType::Op && t.text == op;
  }
  bool peek_name(std::string_view name, std::size_t ahead = 0) const {
    const auto& t = peek(ahead);
    return t.type == TokenType::Name && t.text == name;
  }
  void skip_newlines() {
    while (peek().type == TokenType::Newline) next();
  }

  [[noreturn]] void syntax(const std::string& msg) const {
    throw ParseError(ParseErrorKind::Syntax, msg, peek().loc);
  }
  [[noreturn]] static void forbidden(const std::string& what, SourceLoc loc) {
    throw ParseError(ParseErrorKind::ForbiddenConstruct, what, loc);
  }

  static std::string describe(const Token& t) {
    switch (t.type) {
      case TokenType::Name: return "'" + t.text + "'";
      case TokenType::Int:
      case TokenType::Float: return "number " + t.text;
      case TokenType::String: return "string literal";
      case TokenType::FString: return "f-string";
      case TokenType::Op: return "'" + t.text + "'";
      case TokenType::Newline: return "end of line";
      case TokenType::Indent: return "indent";
      case TokenType::Dedent: return "dedent";
      case TokenType::End: return "end of input";
    }
    return "token";
  }

  void expect_op(std::string_view op) {
    if (!peek_op(op)) syntax("expected '" + std::string(op) + "', found " + describe(peek()));
    next();
  }
  void expect_name(std::string_view name) {
    if (!peek_name(name)) syntax("expected '" + std::string(name) + "', found " + describe(peek()));
    next();
  }
  void expect(TokenType type, std::string_view what) {
    if (peek().type != type) syntax("expected " + std::string(what) + ", found " + describe(peek()));
    next();
  }

  // Operators that exist in Python but not in this language.
  void reject_foreign_op(const Token& t) const {
    if (t.type != TokenType::Op) return;
    static constexpr std::string_view ops[] = {"*", "/", "%", "**", "//", "@", "&", "|", "^",
                                               "~", "<<", ">>", "+=", "-=", "*=", "/=", "%=",
                                               ";", "{", "}"};
    if (std::find(std::begin(ops), std::end(ops), t.text) != std::end(ops))
      forbidden("operator '" + t.text + "'", t.loc);
  }

  // --- module level --------------------------------------------------------

  void parse_typing_import() {
    SourceLoc at = peek().loc;
    if (peek_name("import")) forbidden("import", at);
    next();  // from
    if (!peek_name("typing")) forbidden("import", at);
    next();
    expect_name("import");
    while (true) {
      if (peek().type != TokenType::Name) syntax("expected imported name");
      next();
      if (!peek_op(",")) break;
      next();
    }
    expect(TokenType::Newline, "end of line");
  }

  std::vector<Param> parse_signature() {
    expect_name("def");
    if (peek().type != TokenType::Name)
      syntax("expected function name");
    if (peek().text != "answer")
      throw ParseError(ParseErrorKind::SignatureMismatch,
                       "function must be named 'answer', found '" + peek().text + "'", peek().loc);
    next();
    expect_op("(");
    std::vector<Param> params;
    std::set<std::string> seen;
    while (!peek_op(")")) {
      const Token& name = peek();
      if (name.type != TokenType::Name) syntax("expected parameter name");
      if (detail::is_reserved_name(name.text))
        forbidden("reserved parameter name '" + name.text + "'", name.loc);
      next();
      expect_op(":");
      const Token& kind_tok = peek();
      auto kind = kind_tok.type == TokenType::Name ? parse_kind(kind_tok.text) : std::nullopt;
      if (!kind)
        throw ParseError(ParseErrorKind::SignatureMismatch,
                         "parameter type must be int, float, str, bool or list", kind_tok.loc);
      next();
      if (!seen.insert(name.text).second)
        throw ParseError(ParseErrorKind::Syntax, "duplicate parameter '" + name.text + "'",
                         name.loc);
      params.push_back({name.text, *kind});
      if (!peek_op(",")) break;
      next();
    }
    expect_op(")");
    expect_op("->");
    if (!peek_name("int"))
      throw ParseError(ParseErrorKind::SignatureMismatch, "return type must be int", peek().loc);
    next();
    return params;
  }

  // --- statements ----------------------------------------------------------

  Block parse_suite() {
    Block block;
    if (peek().type != TokenType::Newline) {
      block.push_back(parse_simple_statement());
      return block;
    }
    next();
    skip_newlines();
    expect(TokenType::Indent, "indented block");
    while (peek().type != TokenType::Dedent && peek().type != TokenType::End) {
      block.push_back(parse_statement());
      skip_newlines();
    }
    expect(TokenType::Dedent, "dedent");
    return block;
  }

  Stmt parse_statement() {
    if (peek().type == TokenType::Indent) syntax("unexpected indent");
    if (peek_name("if")) return parse_if();
    if (peek_name("for")) return parse_for();
    return parse_simple_statement();
  }

  void end_simple_statement() {
    reject_foreign_op(peek());
    if (peek().type != TokenType::Newline)
      syntax("expected end of line, found " + describe(peek()));
    next();
  }

  Stmt parse_simple_statement() {
    const Token& first = peek();
    SourceLoc at = first.loc;
    if (first.type == TokenType::Name) {
      if (first.text == "return") {
        next();
        Expr value = parse_expr();
        end_simple_statement();
        return Stmt{Return{std::move(value)}, at};
      }
      if (first.text == "if" || first.text == "for")
        syntax("compound statement not allowed here");
      if (first.text == "elif" || first.text == "else") syntax("'" + first.text + "' without 'if'");
      if (detail::is_forbidden_keyword(first.text) && !peek_op("=", 1) && !peek_op("(", 1))
        forbidden("'" + first.text + "' statement", at);
      if (peek_op("=", 1)) {
        if (detail::is_reserved_name(first.text))
          forbidden("assignment to reserved name '" + first.text + "'", at);
        std::string target = next().text;
        next();
        Expr value = parse_expr();
        end_simple_statement();
        assigned_.insert(target);
        return Stmt{Assign{std::move(target), std::move(value)}, at};
      }
      if (peek_op(".", 1)) {
        if (peek_name("append", 2) && peek_op("(", 3)) {
          std::string target = next().text;
          next();
          next();
          next();
          Expr value = parse_expr();
          if (peek_op(",")) syntax("append takes exactly one argument");
          expect_op(")");
          end_simple_statement();
          return Stmt{Append{std::move(target), std::move(value)}, at};
        }
        forbidden("attribute access", peek(1).loc);
      }
      reject_foreign_op(peek(1));
      if (peek_op("[", 1)) {
        // Either an index expression statement or subscript assignment; both are outside the language.
        parse_expr();
        if (peek_op("=")) forbidden("subscript assignment", at);
        forbidden("expression statement", at);
      }
    }
    parse_expr();
    reject_foreign_op(peek());
    if (peek_op("=")) forbidden("assignment to non-name target", at);
    forbidden("expression statement", at);
  }

  Stmt parse_if() {
    SourceLoc at = next().loc;
    If stmt;
    Expr cond = parse_expr();
    expect_op(":");
    stmt.branches.push_back({std::move(cond), parse_suite()});
    skip_newlines();
    while (peek_name("elif")) {
      next();
      Expr c = parse_expr();
      expect_op(":");
      stmt.branches.push_back({std::move(c), parse_suite()});
      skip_newlines();
    }
    if (peek_name("else")) {
      next();
      expect_op(":");
      stmt.otherwise = parse_suite();
    }
    return Stmt{std::move(stmt), at};
  }

  Stmt parse_for() {
    SourceLoc at = next().loc;
    const Token& var = peek();
    if (var.type != TokenType::Name) syntax("expected loop variable");
    if (detail::is_reserved_name(var.text)) forbidden("loop variable '" + var.text + "'", var.loc);
    std::string name = next().text;
    if (peek_op(",")) forbidden("tuple unpacking", peek().loc);
    expect_name("in");
    Expr iterable = parse_expr();
    expect_op(":");
    assigned_.insert(name);
    Block body = parse_suite();
    if (peek_name("else")) forbidden("for-else", peek().loc);
    return Stmt{ForEach{std::move(name), std::move(iterable), std::move(body)}, at};
  }

  // --- expressions ---------------------------------------------------------

  Expr parse_expr() {
    Expr value = parse_or();
    if (peek_name("if")) {
      SourceLoc at = next().loc;
      Expr cond = parse_or();
      if (!peek_name("else")) syntax("conditional expression requires 'else'");
      next();
      Expr otherwise = parse_expr();
      return Expr{Conditional{std::move(cond), std::move(value), std::move(otherwise)}, at};
    }
    if (peek_name("for")) forbidden("comprehension", peek().loc);
    return value;
  }

  Expr parse_or() {
    Expr lhs = parse_and();
    while (peek_name("or")) {
      SourceLoc at = next().loc;
      Expr rhs = parse_and();
      lhs = Expr{Binary{BinaryOp::Or, std::move(lhs), std::move(rhs)}, at};
    }
    return lhs;
  }

  Expr parse_and() {
    Expr lhs = parse_not();
    while (peek_name("and")) {
      SourceLoc at = next().loc;
      Expr rhs = parse_not();
      lhs = Expr{Binary{BinaryOp::And, std::move(lhs), std::move(rhs)}, at};
    }
    return lhs;
  }

  Expr parse_not() {
    if (peek_name("not")) {
      SourceLoc at = next().loc;
      Expr operand = parse_not();
      return Expr{Unary{UnaryOp::Not, std::move(operand)}, at};
    }
    return parse_comparison();
  }

  std::optional<BinaryOp> peek_compare() const {
    const auto& t = peek();
    if (t.type == TokenType::Name && (t.text == "in" || t.text == "is"))
      forbidden("'" + t.text + "' operator", t.loc);
    if (t.type == TokenType::Name && t.text == "not" && peek_name("in", 1))
      forbidden("'not in' operator", t.loc);
    if (t.type != TokenType::Op) return std::nullopt;
    if (t.text == "==") return BinaryOp::Eq;
    if (t.text == "!=") return BinaryOp::Ne;
    if (t.text == "<") return BinaryOp::Lt;
    if (t.text == "<=") return BinaryOp::Le;
    if (t.text == ">") return BinaryOp::Gt;
    if (t.text == ">=") return BinaryOp::Ge;
    return std::nullopt;
  }

  Expr parse_comparison() {
    Expr lhs = parse_arith();
    if (auto op = peek_compare()) {
      SourceLoc at = next().loc;
      Expr rhs = parse_arith();
      if (peek_compare()) forbidden("chained comparison", peek().loc);
      return Expr{Binary{*op, std::move(lhs), std::move(rhs)}, at};
    }
    return lhs;
  }

  Expr parse_arith() {
    Expr lhs = parse_unary();
    while (true) {
      reject_foreign_op(peek());
      if (!(peek_op("+") || peek_op("-"))) break;
      const Token& op = next();
      BinaryOp bop = op.text == "+" ? BinaryOp::Add : BinaryOp::Sub;
      Expr rhs = parse_unary();
      lhs = Expr{Binary{bop, std::move(lhs), std::move(rhs)}, op.loc};
    }
    return lhs;
  }

  Expr parse_unary() {
    if (peek_op("-")) {
      SourceLoc at = next().loc;
      Expr operand = parse_unary();
      return Expr{Unary{UnaryOp::Negate, std::move(operand)}, at};
    }
    if (peek_op("+")) forbidden("unary '+'", peek().loc);
    reject_foreign_op(peek());
    return parse_postfix();
  }

  Expr parse_postfix() {
    Expr value = parse_atom();
    while (true) {
      if (peek_op("[")) {
        SourceLoc at = next().loc;
        if (peek_op(":")) forbidden("slice", peek().loc);
        Expr index = parse_expr();
        if (peek_op(":")) forbidden("slice", peek().loc);
        expect_op("]");
        value = Expr{Index{std::move(value), std::move(index)}, at};
      } else if (peek_op(".")) {
        forbidden("attribute access", peek().loc);
      } else if (peek_op("(")) {
        forbidden("call of a computed value", peek().loc);
      } else {
        return value;
      }
    }
  }

  FormatString parse_format_body(const Token& tok) {
    FormatString fs;
    const std::string& s = tok.text;
    std::string literal;
    for (std::size_t i = 0; i < s.size(); ++i) {
      char c = s[i];
      if (c == '{') {
        if (i + 1 < s.size() && s[i + 1] == '{') {
          literal += '{';
          ++i;
          continue;
        }
        std::size_t close = s.find('}', i + 1);
        if (close == std::string::npos)
          throw ParseError(ParseErrorKind::Syntax, "unterminated '{' in f-string", tok.loc);
        std::string name = s.substr(i + 1, close - i - 1);
        bool plain = !name.empty() &&
                     (std::isalpha(static_cast<unsigned char>(name[0])) || name[0] == '_') &&
                     std::all_of(name.begin(), name.end(), [](char ch) {
                       return std::isalnum(static_cast<unsigned char>(ch)) || ch == '_';
                     });
        if (!plain) forbidden("f-string expression '{" + name + "}'", tok.loc);
        fs.add_literal(literal);
        literal.clear();
        fs.add_interp(name);
        interpolated_.push_back({name, tok.loc});
        i = close;
      } else if (c == '}') {
        if (i + 1 < s.size() && s[i + 1] == '}') {
          literal += '}';
          ++i;
          continue;
        }
        throw ParseError(ParseErrorKind::Syntax, "single '}' in f-string", tok.loc);
      } else {
        literal += c;
      }
    }
    fs.add_literal(literal);
    return fs;
  }

  Expr parse_retrieve(SourceLoc at) {
    expect_op("(");
    const Token& q = peek();
    RetrieveCall call;
    if (q.type == TokenType::FString) {
      call.question = parse_format_body(q);
    } else if (q.type == TokenType::String) {
      call.question.add_literal(q.text);
    } else {
      syntax("retrieve question must be a string or f-string literal");
    }
    next();
    expect_op(",");
    const Token& k = peek();
    if (k.type == TokenType::Name && peek_op("=", 1)) forbidden("keyword argument", k.loc);
    auto kind = k.type == TokenType::Name ? parse_kind(k.text) : std::nullopt;
    if (!kind) syntax("retrieve type must be one of int, float, str, bool, list");
    call.kind = *kind;
    next();
    if (peek_op(",")) next();
    expect_op(")");
    return Expr{std::move(call), at};
  }

  Expr parse_atom() {
    const Token& t = peek();
    SourceLoc at = t.loc;
    switch (t.type) {
      case TokenType::Int: next(); return Expr{Literal{Value(t.int_value)}, at};
      case TokenType::Float: next(); return Expr{Literal{Value(t.float_value)}, at};
      case TokenType::String: next(); return Expr{Literal{Value(t.text)}, at};
      case TokenType::FString: forbidden("f-string outside retrieve", at);
      case TokenType::Op:
        if (t.text == "(") {
          next();
          if (peek_op(")")) forbidden("tuple", at);
          Expr inner = parse_expr();
          if (peek_op(",")) forbidden("tuple", peek().loc);
          expect_op(")");
          return inner;
        }
        if (t.text == "[") {
          next();
          ListLiteral list;
          while (!peek_op("]")) {
            list.items.push_back(parse_expr());
            if (peek_name("for")) forbidden("comprehension", peek().loc);
            if (!peek_op(",")) break;
            next();
          }
          expect_op("]");
          return Expr{std::move(list), at};
        }
        reject_foreign_op(t);
        syntax("unexpected " + describe(t));
      case TokenType::Name: break;
      default: syntax("unexpected " + describe(t));
    }

    const std::string& name = t.text;
    if (name == "True" || name == "False") {
      next();
      return Expr{Literal{Value(name == "True")}, at};
    }
    if (name == "lambda" || name == "None" || name == "yield" || name == "await")
      forbidden("'" + name + "'", at);
    if (name == "if" || name == "else" || name == "elif" || name == "for" || name == "in" ||
        name == "return" || name == "and" || name == "or" || name == "not" || name == "def")
      syntax("unexpected keyword '" + name + "'");
    next();
    if (peek_op("(")) {
      if (name == "retrieve") return parse_retrieve(at);
      if (detail::is_builtin_name(name)) {
        next();
        if (peek_op(")")) syntax("'" + name + "' takes exactly one argument");
        Expr arg = parse_expr();
        if (peek_name("for")) forbidden("generator expression", peek().loc);
        if (peek_op(",")) syntax("'" + name + "' takes exactly one argument");
        expect_op(")");
        Builtin fn = name == "len"   ? Builtin::Len
                     : name == "all" ? Builtin::All
                     : name == "any" ? Builtin::Any
                                     : Builtin::Set;
        return Expr{BuiltinCall{fn, std::move(arg)}, at};
      }
      forbidden("call to '" + name + "'", at);
    }
    if (detail::is_reserved_name(name)) forbidden("use of reserved name '" + name + "'", at);
    refs_.push_back({name, at});
    return Expr{NameRef{name, false}, at};
  }

  // --- name resolution -----------------------------------------------------

  void resolve_names(Program& program) {
    auto known = [&](const std::string& n) { return params_.count(n) || assigned_.count(n); };
    for (const auto& [name, loc] : refs_)
      if (!known(name)) forbidden("reference to undefined name '" + name + "'", loc);
    for (const auto& [name, loc] : interpolated_)
      if (!known(name)) forbidden("interpolation of undefined name '" + name + "'", loc);
    mark_params(program.body);
    check_append_targets(program.body);
  }

  void mark_params(Block& block) {
    for (auto& stmt : block) {
      std::visit(overloaded{
                     [&](Assign& s) { mark_params(s.value); },
                     [&](Append& s) { mark_params(s.value); },
                     [&](Return& s) { mark_params(s.value); },
                     [&](If& s) {
                       for (auto& br : s.branches) {
                         mark_params(br.cond);
                         mark_params(br.body);
                       }
                       mark_params(s.otherwise);
                     },
                     [&](ForEach& s) {
                       mark_params(s.iterable);
                       mark_params(s.body);
                     },
                 },
                 stmt.node);
    }
  }

  void mark_params(Expr& expr) {
    std::visit(overloaded{
                   [&](NameRef& e) { e.is_param = params_.count(e.name) > 0; },
                   [](Literal&) {},
                   [](RetrieveCall&) {},
                   [&](Unary& e) { mark_params(*e.operand); },
                   [&](Binary& e) {
                     mark_params(*e.lhs);
                     mark_params(*e.rhs);
                   },
                   [&](Index& e) {
                     mark_params(*e.target);
                     mark_params(*e.index);
                   },
                   [&](BuiltinCall& e) { mark_params(*e.arg); },
                   [&](ListLiteral& e) {
                     for (auto& item : e.items) mark_params(item);
                   },
                   [&](Conditional& e) {
                     mark_params(*e.cond);
                     mark_params(*e.then);
                     mark_params(*e.otherwise);
                   },
               },
               expr.node);
  }

  void check_append_targets(const Block& block) {
    for (const auto& stmt : block) {
      if (const auto* a = std::get_if<Append>(&stmt.node)) {
        if (!params_.count(a->target) && !assigned_.count(a->target))
          forbidden("append to undefined name '" + a->target + "'", stmt.loc);
      } else if (const auto* i = std::get_if<If>(&stmt.node)) {
        for (const auto& br : i->branches) check_append_targets(br.body);
        check_append_targets(i->otherwise);
      } else if (const auto* f = std::get_if<ForEach>(&stmt.node)) {
        check_append_targets(f->body);
      }
    }
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::set<std::string> params_;
  std::set<std::string> assigned_;
  std::vector<std::pair<std::string, SourceLoc>> refs_;
  std::vector<std::pair<std::string, SourceLoc>> interpolated_;
};

/// Parses a function header such as `def answer(Film1: str, Film2: str) -> int`.
inline std::vector<Param> parse_header(std::string_view header) {
  return Parser(tokenize(header)).parse_header_only();
}

inline std::string describe_signature(const std::vector<Param>& params) {
  std::string out = "answer(";
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (i) out += ", ";
    out += params[i].name + ": " + std::string(kind_name(params[i].kind));
  }
  return out + ") -> int";
}

/// Parses program source and requires its signature to equal `header` name-for-name.
inline Program parse_program(std::string_view source, std::string_view header) {
  auto expected = parse_header(header);
  Program program = Parser(tokenize(source)).parse_program();
  if (program.params != expected)
    throw ParseError(ParseErrorKind::SignatureMismatch,
                     "expected " + describe_signature(expected) + ", found " +
                         describe_signature(program.params),
                     SourceLoc{1, 1});
  return program;
}

/// Parses program source without a signature requirement.
inline Program parse_program(std::string_view source) {
  return Parser(tokenize(source)).parse_program();
}

}  // namespace ccl::dsl
