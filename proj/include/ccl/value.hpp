#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace ccl {

/// Closed set of value kinds a program parameter or retrieve call may carry.
enum class ValueKind { Int, Float, Str, Bool, List };

inline std::string_view kind_name(ValueKind kind) {
  switch (kind) {
    case ValueKind::Int: return "int";
    case ValueKind::Float: return "float";
    case ValueKind::Str: return "str";
    case ValueKind::Bool: return "bool";
    case ValueKind::List: return "list";
  }
  return "?";
}

inline std::optional<ValueKind> parse_kind(std::string_view name) {
  if (name == "int") return ValueKind::Int;
  if (name == "float") return ValueKind::Float;
  if (name == "str") return ValueKind::Str;
  if (name == "bool") return ValueKind::Bool;
  if (name == "list") return ValueKind::List;
  return std::nullopt;
}

struct Value;
using List = std::vector<Value>;

/// A runtime value. Alternatives are ordered to match ValueKind.
struct Value {
  std::variant<std::int64_t, double, std::string, bool, List> data;

  Value() : data(std::int64_t{0}) {}
  Value(std::int64_t v) : data(v) {}
  Value(int v) : data(std::int64_t{v}) {}
  Value(double v) : data(v) {}
  Value(std::string v) : data(std::move(v)) {}
  Value(const char* v) : data(std::string(v)) {}
  Value(bool v) : data(v) {}
  Value(List v) : data(std::move(v)) {}

  ValueKind kind() const { return static_cast<ValueKind>(data.index()); }

  bool is(ValueKind k) const { return kind() == k; }
  std::int64_t as_int() const { return std::get<std::int64_t>(data); }
  double as_float() const { return std::get<double>(data); }
  const std::string& as_str() const { return std::get<std::string>(data); }
  bool as_bool() const { return std::get<bool>(data); }
  const List& as_list() const { return std::get<List>(data); }
  List& as_list() { return std::get<List>(data); }

  bool is_number() const { return is(ValueKind::Int) || is(ValueKind::Float); }
  double as_number() const {
    return is(ValueKind::Int) ? static_cast<double>(as_int()) : as_float();
  }

  /// Exact structural equality (kinds must match). Used for AST/trace comparison.
  friend bool operator==(const Value& a, const Value& b) { return a.data == b.data; }
};

/// Value substituted for a rejected retrieve call.
inline Value default_value(ValueKind kind) {
  switch (kind) {
    case ValueKind::Int: return Value(std::int64_t{0});
    case ValueKind::Float: return Value(0.0);
    case ValueKind::Str: return Value(std::string{});
    case ValueKind::Bool: return Value(false);
    case ValueKind::List: return Value(List{});
  }
  return Value();
}

/// Shortest decimal text that round-trips to the same double.
inline std::string shortest_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw std::runtime_error("float formatting failed");
  return std::string(buf, end);
}

/// Text rendering used when a value is interpolated into a retrieve question.
inline std::string render_value(const Value& v) {
  switch (v.kind()) {
    case ValueKind::Int: return std::to_string(v.as_int());
    case ValueKind::Float: return shortest_double(v.as_float());
    case ValueKind::Str: return v.as_str();
    case ValueKind::Bool: return v.as_bool() ? "true" : "false";
    case ValueKind::List: {
      std::string out;
      for (const auto& item : v.as_list()) {
        if (!out.empty()) out += ", ";
        out += render_value(item);
      }
      return out;
    }
  }
  return {};
}

/// Language-level equality: ints and floats compare numerically, other kinds must match.
inline bool values_equal(const Value& a, const Value& b) {
  if (a.is_number() && b.is_number()) {
    if (a.is(ValueKind::Int) && b.is(ValueKind::Int)) return a.as_int() == b.as_int();
    return a.as_number() == b.as_number();
  }
  if (a.kind() != b.kind()) return false;
  if (a.is(ValueKind::List)) {
    const auto& x = a.as_list();
    const auto& y = b.as_list();
    if (x.size() != y.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i)
      if (!values_equal(x[i], y[i])) return false;
    return true;
  }
  return a.data == b.data;
}

}  // namespace ccl
