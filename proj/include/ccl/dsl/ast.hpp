#pragma once

#include <memory>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "ccl/value.hpp"

namespace ccl::dsl {

struct SourceLoc {
  int line = 0;
  int column = 0;
};

/// Owning, deep-copying pointer so recursive AST nodes keep value semantics.
template <typename T>
class Box {
 public:
  Box(T value) : ptr_(std::make_unique<T>(std::move(value))) {}
  Box(const Box& other) : ptr_(std::make_unique<T>(*other.ptr_)) {}
  Box(Box&&) noexcept = default;
  Box& operator=(const Box& other) {
    if (this != &other) ptr_ = std::make_unique<T>(*other.ptr_);
    return *this;
  }
  Box& operator=(Box&&) noexcept = default;

  const T& operator*() const { return *ptr_; }
  const T* operator->() const { return ptr_.get(); }
  T& operator*() { return *ptr_; }
  T* operator->() { return ptr_.get(); }

  friend bool operator==(const Box& a, const Box& b) { return *a.ptr_ == *b.ptr_; }

 private:
  std::unique_ptr<T> ptr_;
};

/// Interpolated question text: literal runs and `{name}` references.
struct FormatString {
  struct Interp {
    std::string name;
    bool operator==(const Interp&) const = default;
  };
  using Segment = std::variant<std::string, Interp>;
  std::vector<Segment> segments;

  /// Appends a literal, merging with a preceding literal so the segment list is canonical.
  void add_literal(std::string_view text) {
    if (text.empty()) return;
    if (!segments.empty())
      if (auto* prev = std::get_if<std::string>(&segments.back())) {
        *prev += text;
        return;
      }
    segments.emplace_back(std::string(text));
  }
  void add_interp(std::string name) { segments.emplace_back(Interp{std::move(name)}); }

  bool operator==(const FormatString&) const = default;
};

enum class UnaryOp { Not, Negate };
enum class BinaryOp { And, Or, Eq, Ne, Lt, Le, Gt, Ge, Add, Sub };
enum class Builtin { Len, All, Any, Set };

struct Expr;

struct Literal {
  Value value;
  bool operator==(const Literal&) const = default;
};
struct NameRef {
  std::string name;
  bool is_param = false;
  bool operator==(const NameRef&) const = default;
};
struct RetrieveCall {
  FormatString question;
  ValueKind kind = ValueKind::Bool;
  bool operator==(const RetrieveCall&) const = default;
};
struct Unary {
  UnaryOp op;
  Box<Expr> operand;
  bool operator==(const Unary&) const = default;
};
struct Binary {
  BinaryOp op;
  Box<Expr> lhs;
  Box<Expr> rhs;
  bool operator==(const Binary&) const = default;
};
struct Index {
  Box<Expr> target;
  Box<Expr> index;
  bool operator==(const Index&) const = default;
};
struct BuiltinCall {
  Builtin fn;
  Box<Expr> arg;
  bool operator==(const BuiltinCall&) const = default;
};
struct ListLiteral {
  std::vector<Expr> items;
  bool operator==(const ListLiteral&) const = default;
};
/// `then if cond else otherwise`
struct Conditional {
  Box<Expr> cond;
  Box<Expr> then;
  Box<Expr> otherwise;
  bool operator==(const Conditional&) const = default;
};

struct Expr {
  std::variant<Literal, NameRef, RetrieveCall, Unary, Binary, Index, BuiltinCall, ListLiteral,
               Conditional>
      node;
  SourceLoc loc;

  // Source locations do not participate in equality.
  friend bool operator==(const Expr& a, const Expr& b) { return a.node == b.node; }
};

struct Stmt;
using Block = std::vector<Stmt>;

struct Assign {
  std::string target;
  Expr value;
  bool operator==(const Assign&) const = default;
};
struct Append {
  std::string target;
  Expr value;
  bool operator==(const Append&) const = default;
};
struct Return {
  Expr value;
  bool operator==(const Return&) const = default;
};
struct IfBranch {
  Expr cond;
  Block body;
  bool operator==(const IfBranch&) const = default;
};
/// if / elif chain with optional else.
struct If {
  std::vector<IfBranch> branches;
  Block otherwise;
  bool operator==(const If&) const = default;
};
struct ForEach {
  std::string var;
  Expr iterable;
  Block body;
  bool operator==(const ForEach&) const = default;
};

struct Stmt {
  std::variant<Assign, Append, Return, If, ForEach> node;
  SourceLoc loc;

  friend bool operator==(const Stmt& a, const Stmt& b) { return a.node == b.node; }
};

struct Param {
  std::string name;
  ValueKind kind;
  bool operator==(const Param&) const = default;
};

/// Parsed `answer(...) -> int` function.
struct Program {
  std::vector<Param> params;
  Block body;
  bool operator==(const Program&) const = default;
};

template <typename... Fs>
struct overloaded : Fs... {
  using Fs::operator()...;
};
template <typename... Fs>
overloaded(Fs...) -> overloaded<Fs...>;

/// Pre-order visit of every expression in a block, including nested ones.
template <typename F>
void visit_exprs(const Expr& expr, F&& fn);

template <typename F>
void visit_exprs(const Block& block, F&& fn) {
  for (const auto& stmt : block) {
    std::visit(overloaded{
                   [&](const Assign& s) { visit_exprs(s.value, fn); },
                   [&](const Append& s) { visit_exprs(s.value, fn); },
                   [&](const Return& s) { visit_exprs(s.value, fn); },
                   [&](const If& s) {
                     for (const auto& br : s.branches) {
                       visit_exprs(br.cond, fn);
                       visit_exprs(br.body, fn);
                     }
                     visit_exprs(s.otherwise, fn);
                   },
                   [&](const ForEach& s) {
                     visit_exprs(s.iterable, fn);
                     visit_exprs(s.body, fn);
                   },
               },
               stmt.node);
  }
}

template <typename F>
void visit_exprs(const Expr& expr, F&& fn) {
  fn(expr);
  std::visit(overloaded{
                 [](const Literal&) {},
                 [](const NameRef&) {},
                 [](const RetrieveCall&) {},
                 [&](const Unary& e) { visit_exprs(*e.operand, fn); },
                 [&](const Binary& e) {
                   visit_exprs(*e.lhs, fn);
                   visit_exprs(*e.rhs, fn);
                 },
                 [&](const Index& e) {
                   visit_exprs(*e.target, fn);
                   visit_exprs(*e.index, fn);
                 },
                 [&](const BuiltinCall& e) { visit_exprs(*e.arg, fn); },
                 [&](const ListLiteral& e) {
                   for (const auto& item : e.items) visit_exprs(item, fn);
                 },
                 [&](const Conditional& e) {
                   visit_exprs(*e.cond, fn);
                   visit_exprs(*e.then, fn);
                   visit_exprs(*e.otherwise, fn);
                 },
             },
             expr.node);
}

}  // namespace ccl::dsl
