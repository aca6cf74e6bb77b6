#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "ccl/dsl/ast.hpp"
#include "ccl/retriever.hpp"

namespace ccl {

struct ExecutionLimits {
  std::size_t max_retrieve_calls = 64;
  std::size_t max_steps = 10000;
  std::size_t max_list_len = 1024;

  void validate() const {
    if (max_retrieve_calls == 0 || max_steps == 0 || max_list_len == 0)
      throw std::invalid_argument("execution limits must be strictly positive");
  }
};

enum class LimitKind { RetrieveCalls, Steps, ListLength };

inline std::string_view limit_name(LimitKind kind) {
  switch (kind) {
    case LimitKind::RetrieveCalls: return "retrieve";
    case LimitKind::Steps: return "steps";
    case LimitKind::ListLength: return "list";
  }
  return "?";
}

struct RetrieveEvent {
  std::string rendered_question;
  ValueKind requested_kind = ValueKind::Bool;
  RetrieveResponse outcome;
  bool operator==(const RetrieveEvent&) const = default;
};

struct Answered {
  std::int64_t index;
  bool operator==(const Answered&) const = default;
};
struct RuntimeFailure {
  std::string reason;
  bool operator==(const RuntimeFailure&) const = default;
};
struct LimitExceeded {
  LimitKind which;
  bool operator==(const LimitExceeded&) const = default;
};

using ExecutionStatus = std::variant<Answered, RuntimeFailure, LimitExceeded>;

struct ExecutionResult {
  ExecutionStatus status = RuntimeFailure{"not executed"};
  std::vector<RetrieveEvent> trace;
  bool was_rejected = false;
  /// Set when a BackendError caused the failure; such members never count as rejected.
  bool backend_error = false;

  std::size_t dynamic_retrieve_count() const { return trace.size(); }
  std::optional<std::int64_t> answer() const {
    if (const auto* a = std::get_if<Answered>(&status)) return a->index;
    return std::nullopt;
  }
  bool operator==(const ExecutionResult&) const = default;
};

using Environment = std::map<std::string, Value>;

class UnboundName : public std::runtime_error {
 public:
  explicit UnboundName(const std::string& name)
      : std::runtime_error("unbound name '" + name + "'"), name_(name) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

/// Renders a retrieve question by substituting each interpolation with its value's text.
inline std::string render_question(const dsl::FormatString& fs, const Environment& env) {
  std::string out;
  for (const auto& seg : fs.segments) {
    if (const auto* lit = std::get_if<std::string>(&seg)) {
      out += *lit;
    } else {
      const auto& name = std::get<dsl::FormatString::Interp>(seg).name;
      auto it = env.find(name);
      if (it == env.end()) throw UnboundName(name);
      out += render_value(it->second);
    }
  }
  return out;
}

namespace detail {

struct Failure {
  ExecutionStatus status;
};

class Interpreter {
 public:
  Interpreter(Retriever& retriever, const ExecutionLimits& limits, ExecutionResult& result)
      : retriever_(retriever), limits_(limits), result_(result) {}

  /// Returns the value of the first `return` reached, or nullopt if the block falls through.
  std::optional<Value> run_block(const dsl::Block& block) {
    for (const auto& stmt : block)
      if (auto ret = run_stmt(stmt)) return ret;
    return std::nullopt;
  }

  Environment env;

 private:
  [[noreturn]] static void fail(std::string reason) { throw Failure{RuntimeFailure{std::move(reason)}}; }
  [[noreturn]] static void limit(LimitKind which) { throw Failure{LimitExceeded{which}}; }

  void step() {
    if (++steps_ > limits_.max_steps) limit(LimitKind::Steps);
  }

  void check_list(const Value& v) const {
    if (v.is(ValueKind::List) && v.as_list().size() > limits_.max_list_len) limit(LimitKind::ListLength);
  }

  bool require_bool(const Value& v, const char* where) const {
    if (!v.is(ValueKind::Bool))
      fail(std::string(where) + " requires bool, got " + std::string(kind_name(v.kind())));
    return v.as_bool();
  }

  std::optional<Value> run_stmt(const dsl::Stmt& stmt) {
    step();
    return std::visit(
        dsl::overloaded{
            [&](const dsl::Assign& s) -> std::optional<Value> {
              env[s.target] = eval(s.value);
              return std::nullopt;
            },
            [&](const dsl::Append& s) -> std::optional<Value> {
              Value item = eval(s.value);
              auto it = env.find(s.target);
              if (it == env.end()) fail("append to unassigned name '" + s.target + "'");
              if (!it->second.is(ValueKind::List)) fail("append target '" + s.target + "' is not a list");
              if (it->second.as_list().size() >= limits_.max_list_len) limit(LimitKind::ListLength);
              it->second.as_list().push_back(std::move(item));
              return std::nullopt;
            },
            [&](const dsl::Return& s) -> std::optional<Value> { return eval(s.value); },
            [&](const dsl::If& s) -> std::optional<Value> {
              for (const auto& br : s.branches)
                if (require_bool(eval(br.cond), "if condition")) return run_block(br.body);
              return run_block(s.otherwise);
            },
            [&](const dsl::ForEach& s) -> std::optional<Value> {
              Value iterable = eval(s.iterable);
              if (!iterable.is(ValueKind::List)) fail("for loop over non-list");
              check_list(iterable);
              for (const auto& item : iterable.as_list()) {
                env[s.var] = item;
                if (auto ret = run_block(s.body)) return ret;
              }
              return std::nullopt;
            },
        },
        stmt.node);
  }

  Value retrieve(const dsl::RetrieveCall& call) {
    if (result_.trace.size() >= limits_.max_retrieve_calls) limit(LimitKind::RetrieveCalls);
    std::string question;
    try {
      question = render_question(call.question, env);
    } catch (const UnboundName& e) {
      fail(e.what());
    }
    if (question.empty()) fail("empty retrieve question");
    RetrieveResponse response = retriever_.retrieve({question, call.kind});
    if (response.is_value() && response.get_value().kind() != call.kind)
      response = RetrieveResponse::error("retriever returned " +
                                         std::string(kind_name(response.get_value().kind())) +
                                         " for a " + std::string(kind_name(call.kind)) + " request");
    result_.trace.push_back({question, call.kind, response});
    if (response.is_rejected()) {
      result_.was_rejected = true;
      return default_value(call.kind);
    }
    if (response.is_error()) {
      result_.backend_error = true;
      fail("retriever backend error: " + response.error_reason());
    }
    Value v = response.get_value();
    check_list(v);
    return v;
  }

  static Value arith(dsl::BinaryOp op, const Value& a, const Value& b) {
    if (!a.is_number() || !b.is_number())
      fail(std::string("arithmetic on ") + std::string(kind_name(a.kind())) + " and " +
           std::string(kind_name(b.kind())));
    if (a.is(ValueKind::Int) && b.is(ValueKind::Int)) {
      std::int64_t out;
      bool overflow = op == dsl::BinaryOp::Add ? __builtin_add_overflow(a.as_int(), b.as_int(), &out)
                                               : __builtin_sub_overflow(a.as_int(), b.as_int(), &out);
      if (overflow) fail("integer overflow");
      return Value(out);
    }
    double x = a.as_number(), y = b.as_number();
    return Value(op == dsl::BinaryOp::Add ? x + y : x - y);
  }

  static bool order(dsl::BinaryOp op, const Value& a, const Value& b) {
    int cmp;
    if (a.is(ValueKind::Int) && b.is(ValueKind::Int)) {
      cmp = a.as_int() < b.as_int() ? -1 : (a.as_int() > b.as_int() ? 1 : 0);
    } else if (a.is_number() && b.is_number()) {
      double x = a.as_number(), y = b.as_number();
      if (x != x || y != y) return false;
      cmp = x < y ? -1 : (x > y ? 1 : 0);
    } else if (a.is(ValueKind::Str) && b.is(ValueKind::Str)) {
      int c = a.as_str().compare(b.as_str());
      cmp = c < 0 ? -1 : (c > 0 ? 1 : 0);
    } else {
      fail(std::string("cannot order ") + std::string(kind_name(a.kind())) + " and " +
           std::string(kind_name(b.kind())));
    }
    switch (op) {
      case dsl::BinaryOp::Lt: return cmp < 0;
      case dsl::BinaryOp::Le: return cmp <= 0;
      case dsl::BinaryOp::Gt: return cmp > 0;
      default: return cmp >= 0;
    }
  }

  Value eval(const dsl::Expr& expr) {
    step();
    return std::visit(
        dsl::overloaded{
            [&](const dsl::Literal& e) { return e.value; },
            [&](const dsl::NameRef& e) {
              auto it = env.find(e.name);
              if (it == env.end()) fail("name '" + e.name + "' used before assignment");
              return it->second;
            },
            [&](const dsl::RetrieveCall& e) { return retrieve(e); },
            [&](const dsl::Unary& e) {
              Value v = eval(*e.operand);
              if (e.op == dsl::UnaryOp::Not) return Value(!require_bool(v, "'not'"));
              if (v.is(ValueKind::Int)) {
                if (v.as_int() == std::numeric_limits<std::int64_t>::min()) fail("integer overflow");
                return Value(-v.as_int());
              }
              if (v.is(ValueKind::Float)) return Value(-v.as_float());
              fail("negation of " + std::string(kind_name(v.kind())));
            },
            [&](const dsl::Binary& e) {
              using Op = dsl::BinaryOp;
              if (e.op == Op::And || e.op == Op::Or) {
                bool lhs = require_bool(eval(*e.lhs), e.op == Op::And ? "'and'" : "'or'");
                if (e.op == Op::And && !lhs) return Value(false);
                if (e.op == Op::Or && lhs) return Value(true);
                return Value(require_bool(eval(*e.rhs), e.op == Op::And ? "'and'" : "'or'"));
              }
              Value a = eval(*e.lhs);
              Value b = eval(*e.rhs);
              switch (e.op) {
                case Op::Eq: return Value(values_equal(a, b));
                case Op::Ne: return Value(!values_equal(a, b));
                case Op::Add:
                case Op::Sub: return arith(e.op, a, b);
                default: return Value(order(e.op, a, b));
              }
            },
            [&](const dsl::Index& e) {
              Value target = eval(*e.target);
              Value index = eval(*e.index);
              if (!target.is(ValueKind::List)) fail("indexing a non-list");
              if (!index.is(ValueKind::Int)) fail("list index must be int");
              const auto& items = target.as_list();
              auto i = index.as_int();
              if (i < 0 || static_cast<std::size_t>(i) >= items.size())
                fail("list index " + std::to_string(i) + " out of range for length " +
                     std::to_string(items.size()));
              return items[static_cast<std::size_t>(i)];
            },
            [&](const dsl::BuiltinCall& e) { return builtin(e.fn, eval(*e.arg)); },
            [&](const dsl::ListLiteral& e) {
              if (e.items.size() > limits_.max_list_len) limit(LimitKind::ListLength);
              List items;
              items.reserve(e.items.size());
              for (const auto& item : e.items) items.push_back(eval(item));
              return Value(std::move(items));
            },
            [&](const dsl::Conditional& e) {
              return require_bool(eval(*e.cond), "conditional expression") ? eval(*e.then)
                                                                           : eval(*e.otherwise);
            },
        },
        expr.node);
  }

  static Value builtin(dsl::Builtin fn, const Value& arg) {
    switch (fn) {
      case dsl::Builtin::Len:
        if (arg.is(ValueKind::List)) return Value(static_cast<std::int64_t>(arg.as_list().size()));
        if (arg.is(ValueKind::Str)) return Value(static_cast<std::int64_t>(arg.as_str().size()));
        fail("len() of " + std::string(kind_name(arg.kind())));
      case dsl::Builtin::All:
      case dsl::Builtin::Any: {
        if (!arg.is(ValueKind::List)) fail("all()/any() require a list");
        bool all = true, any = false;
        for (const auto& item : arg.as_list()) {
          if (!item.is(ValueKind::Bool)) fail("all()/any() require a list of bool");
          all = all && item.as_bool();
          any = any || item.as_bool();
        }
        return Value(fn == dsl::Builtin::All ? all : any);
      }
      case dsl::Builtin::Set: {
        if (!arg.is(ValueKind::List)) fail("set() requires a list");
        List unique;
        for (const auto& item : arg.as_list()) {
          bool seen = false;
          for (const auto& u : unique) seen = seen || values_equal(u, item);
          if (!seen) unique.push_back(item);
        }
        return Value(std::move(unique));
      }
    }
    fail("unknown builtin");
  }

  Retriever& retriever_;
  const ExecutionLimits& limits_;
  ExecutionResult& result_;
  std::size_t steps_ = 0;
};

}  // namespace detail

/// Runs `program` on one set of parameter bindings. Only retriever calls leave the sandbox.
///
/// A rejected retrieve yields the kind's default value and execution continues; a backend
/// error ends the run as RuntimeFailure. Parameter bindings are strings and are converted to
/// the declared parameter kind.
inline ExecutionResult execute(const dsl::Program& program, const Environment& bindings,
                               Retriever& retriever, const ExecutionLimits& limits = {}) {
  limits.validate();
  ExecutionResult result;
  detail::Interpreter interp(retriever, limits, result);
  try {
    for (const auto& p : program.params) {
      auto it = bindings.find(p.name);
      if (it == bindings.end()) throw detail::Failure{RuntimeFailure{"missing binding for '" + p.name + "'"}};
      bool numeric_ok = p.kind == ValueKind::Float && it->second.is_number();
      if (it->second.kind() != p.kind && !numeric_ok)
        throw detail::Failure{RuntimeFailure{"binding for '" + p.name + "' is not " +
                                             std::string(kind_name(p.kind))}};
      interp.env[p.name] =
          numeric_ok ? Value(it->second.as_number()) : it->second;
    }
    auto ret = interp.run_block(program.body);
    if (!ret) {
      result.status = RuntimeFailure{"function ended without return"};
    } else if (!ret->is(ValueKind::Int)) {
      result.status = RuntimeFailure{"non-integer return (" + std::string(kind_name(ret->kind())) + ")"};
    } else if (ret->as_int() < 0) {
      result.status = RuntimeFailure{"negative option index " + std::to_string(ret->as_int())};
    } else {
      result.status = Answered{ret->as_int()};
    }
  } catch (detail::Failure& f) {
    result.status = std::move(f.status);
  }
  return result;
}

/// Converts text bindings to parameter values according to declared kinds.
inline Environment bind_parameters(const dsl::Program& program,
                                   const std::map<std::string, std::string>& text) {
  Environment env;
  for (const auto& p : program.params) {
    auto it = text.find(p.name);
    if (it == text.end()) continue;
    const std::string& s = it->second;
    switch (p.kind) {
      case ValueKind::Str: env[p.name] = Value(s); break;
      case ValueKind::Int: {
        std::int64_t v = 0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec == std::errc{} && ptr == s.data() + s.size()) env[p.name] = Value(v);
        break;
      }
      case ValueKind::Float: {
        double v = 0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec == std::errc{} && ptr == s.data() + s.size()) env[p.name] = Value(v);
        break;
      }
      case ValueKind::Bool:
        if (s == "true" || s == "True") env[p.name] = Value(true);
        if (s == "false" || s == "False") env[p.name] = Value(false);
        break;
      case ValueKind::List: {
        auto j = nlohmann::json::parse(s, nullptr, false);
        if (auto v = value_from_json(j, ValueKind::List)) env[p.name] = *v;
        break;
      }
    }
  }
  return env;
}

inline std::string status_label(const ExecutionStatus& status) {
  return std::visit(dsl::overloaded{
                        [](const Answered& a) { return "answered(" + std::to_string(a.index) + ")"; },
                        [](const RuntimeFailure& f) { return "failure: " + f.reason; },
                        [](const LimitExceeded& l) { return "limit exceeded: " + std::string(limit_name(l.which)); },
                    },
                    status);
}

/// Trace export row: `{"q", "kind", "outcome": "value"|"rejected"|"error", "value"?}`.
inline nlohmann::json event_to_json(const RetrieveEvent& ev) {
  nlohmann::json j{{"q", ev.rendered_question}, {"kind", std::string(kind_name(ev.requested_kind))}};
  if (ev.outcome.is_value()) {
    j["outcome"] = "value";
    j["value"] = value_to_json(ev.outcome.get_value());
  } else if (ev.outcome.is_rejected()) {
    j["outcome"] = "rejected";
  } else {
    j["outcome"] = "error";
    j["error"] = ev.outcome.error_reason();
  }
  return j;
}

}  // namespace ccl
