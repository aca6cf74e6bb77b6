#pragma once

#include <string>

#include "ccl/dsl/ast.hpp"

namespace ccl::dsl {

namespace detail {

// Binding strength, loosest first.
enum Prec : int {
  kCond = 1,
  kOr = 2,
  kAnd = 3,
  kNot = 4,
  kCompare = 5,
  kArith = 6,
  kNegate = 7,
  kAtom = 8,
};

inline int binary_prec(BinaryOp op) {
  switch (op) {
    case BinaryOp::Or: return kOr;
    case BinaryOp::And: return kAnd;
    case BinaryOp::Add:
    case BinaryOp::Sub: return kArith;
    default: return kCompare;
  }
}

inline std::string_view binary_token(BinaryOp op) {
  switch (op) {
    case BinaryOp::And: return "and";
    case BinaryOp::Or: return "or";
    case BinaryOp::Eq: return "==";
    case BinaryOp::Ne: return "!=";
    case BinaryOp::Lt: return "<";
    case BinaryOp::Le: return "<=";
    case BinaryOp::Gt: return ">";
    case BinaryOp::Ge: return ">=";
    case BinaryOp::Add: return "+";
    case BinaryOp::Sub: return "-";
  }
  return "?";
}

inline std::string_view builtin_token(Builtin fn) {
  switch (fn) {
    case Builtin::Len: return "len";
    case Builtin::All: return "all";
    case Builtin::Any: return "any";
    case Builtin::Set: return "set";
  }
  return "?";
}

inline int expr_prec(const Expr& e) {
  return std::visit(overloaded{
                        [](const Conditional&) { return int{kCond}; },
                        [](const Binary& b) { return binary_prec(b.op); },
                        [](const Unary& u) { return u.op == UnaryOp::Not ? int{kNot} : int{kNegate}; },
                        [](const auto&) { return int{kAtom}; },
                    },
                    e.node);
}

inline void escape_into(std::string& out, std::string_view text, bool braces) {
  for (char c : text) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '"': out += "\\\""; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '{':
        out += braces ? "{{" : "{";
        break;
      case '}':
        out += braces ? "}}" : "}";
        break;
      default: out += c;
    }
  }
}

inline std::string float_literal(double v) {
  std::string s = shortest_double(v);
  if (s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

inline std::string format_literal(const Value& v) {
  switch (v.kind()) {
    case ValueKind::Int: return std::to_string(v.as_int());
    case ValueKind::Float: return float_literal(v.as_float());
    case ValueKind::Bool: return v.as_bool() ? "True" : "False";
    case ValueKind::Str: {
      std::string out = "\"";
      escape_into(out, v.as_str(), false);
      return out + "\"";
    }
    case ValueKind::List: {
      std::string out = "[";
      const auto& items = v.as_list();
      for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += ", ";
        out += format_literal(items[i]);
      }
      return out + "]";
    }
  }
  return {};
}

inline std::string format_question(const FormatString& fs) {
  bool has_interp = false;
  for (const auto& seg : fs.segments)
    has_interp |= std::holds_alternative<FormatString::Interp>(seg);
  std::string out = has_interp ? "f\"" : "\"";
  for (const auto& seg : fs.segments) {
    if (const auto* lit = std::get_if<std::string>(&seg)) {
      escape_into(out, *lit, has_interp);
    } else {
      out += "{" + std::get<FormatString::Interp>(seg).name + "}";
    }
  }
  return out + "\"";
}

inline std::string format_expr(const Expr& e);

inline std::string wrap(const Expr& e, int min_prec) {
  std::string s = format_expr(e);
  return expr_prec(e) < min_prec ? "(" + s + ")" : s;
}

inline std::string format_expr(const Expr& e) {
  return std::visit(
      overloaded{
          [](const Literal& l) { return format_literal(l.value); },
          [](const NameRef& n) { return n.name; },
          [](const RetrieveCall& r) {
            return "retrieve(" + format_question(r.question) + ", " + std::string(kind_name(r.kind)) +
                   ")";
          },
          [](const Unary& u) {
            if (u.op == UnaryOp::Not) return "not " + wrap(*u.operand, kNot);
            return "-" + wrap(*u.operand, kNegate);
          },
          [](const Binary& b) {
            int p = binary_prec(b.op);
            // Comparisons do not chain, so both sides need strictly tighter binding.
            int lhs_min = p == kCompare ? p + 1 : p;
            return wrap(*b.lhs, lhs_min) + " " + std::string(binary_token(b.op)) + " " +
                   wrap(*b.rhs, p + 1);
          },
          [](const Index& i) { return wrap(*i.target, kAtom) + "[" + format_expr(*i.index) + "]"; },
          [](const BuiltinCall& c) {
            return std::string(builtin_token(c.fn)) + "(" + format_expr(*c.arg) + ")";
          },
          [](const ListLiteral& l) {
            std::string out = "[";
            for (std::size_t i = 0; i < l.items.size(); ++i) {
              if (i) out += ", ";
              out += format_expr(l.items[i]);
            }
            return out + "]";
          },
          [](const Conditional& c) {
            return wrap(*c.then, kOr) + " if " + wrap(*c.cond, kOr) + " else " +
                   wrap(*c.otherwise, kCond);
          },
      },
      e.node);
}

inline void format_block(std::string& out, const Block& block, int depth) {
  const std::string indent(static_cast<std::size_t>(depth) * 4, ' ');
  for (const auto& stmt : block) {
    std::visit(overloaded{
                   [&](const Assign& s) { out += indent + s.target + " = " + format_expr(s.value) + "\n"; },
                   [&](const Append& s) {
                     out += indent + s.target + ".append(" + format_expr(s.value) + ")\n";
                   },
                   [&](const Return& s) { out += indent + "return " + format_expr(s.value) + "\n"; },
                   [&](const If& s) {
                     for (std::size_t i = 0; i < s.branches.size(); ++i) {
                       out += indent + (i == 0 ? "if " : "elif ") + format_expr(s.branches[i].cond) + ":\n";
                       format_block(out, s.branches[i].body, depth + 1);
                     }
                     if (!s.otherwise.empty()) {
                       out += indent + "else:\n";
                       format_block(out, s.otherwise, depth + 1);
                     }
                   },
                   [&](const ForEach& s) {
                     out += indent + "for " + s.var + " in " + format_expr(s.iterable) + ":\n";
                     format_block(out, s.body, depth + 1);
                   },
               },
               stmt.node);
  }
}

}  // namespace detail

/// Canonical source text: fixed 4-space indentation, minimal parentheses, no comments.
inline std::string format_program(const Program& program) {
  std::string out = "def answer(";
  for (std::size_t i = 0; i < program.params.size(); ++i) {
    if (i) out += ", ";
    out += program.params[i].name + ": " + std::string(kind_name(program.params[i].kind));
  }
  out += ") -> int:\n";
  detail::format_block(out, program.body, 1);
  return out;
}

inline std::string format_expr(const Expr& e) { return detail::format_expr(e); }

}  // namespace ccl::dsl
