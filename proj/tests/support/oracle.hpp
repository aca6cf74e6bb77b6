#pragma once

// A deliberately naive second evaluator for the answer(...) language, written from the
// language rules rather than from the production interpreter. Values are a flat tagged
// struct; failures are exceptions carrying a category only. It has no step budget, so
// callers keep programs small.

#include <charconv>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ccl/dsl/ast.hpp"
#include "ccl/retriever.hpp"

namespace ccl::testkit {

struct OVal {
  char tag = 'n';  // i f s b l
  std::int64_t i = 0;
  double f = 0;
  std::string s;
  bool b = false;
  std::vector<OVal> l;
};

struct OracleResult {
  enum class Status { Answer, Failure, RetrieveLimit, ListLimit } status = Status::Failure;
  std::int64_t answer = -1;
  std::size_t calls = 0;
  bool rejected = false;
  bool backend_error = false;
};

class Oracle {
 public:
  Oracle(Retriever& r, std::size_t max_calls = 64, std::size_t max_list = 1024)
      : r_(r), max_calls_(max_calls), max_list_(max_list) {}

  OracleResult run(const dsl::Program& p, const std::map<std::string, OVal>& args) {
    OracleResult res;
    vars_ = args;
    calls_ = 0;
    rejected_ = false;
    backend_ = false;
    try {
      std::optional<OVal> ret = block(p.body);
      if (ret && ret->tag == 'i' && ret->i >= 0) {
        res.status = OracleResult::Status::Answer;
        res.answer = ret->i;
      }
    } catch (Fail f) {
      res.status = f.kind;
    }
    res.calls = calls_;
    res.rejected = rejected_;
    res.backend_error = backend_;
    return res;
  }

  static OVal from_value(const Value& v) {
    OVal o;
    switch (v.kind()) {
      case ValueKind::Int: o.tag = 'i'; o.i = v.as_int(); break;
      case ValueKind::Float: o.tag = 'f'; o.f = v.as_float(); break;
      case ValueKind::Str: o.tag = 's'; o.s = v.as_str(); break;
      case ValueKind::Bool: o.tag = 'b'; o.b = v.as_bool(); break;
      case ValueKind::List:
        o.tag = 'l';
        for (const auto& x : v.as_list()) o.l.push_back(from_value(x));
        break;
    }
    return o;
  }

 private:
  struct Fail {
    OracleResult::Status kind;
  };
  [[noreturn]] static void fail() { throw Fail{OracleResult::Status::Failure}; }

  static OVal I(std::int64_t x) { OVal o; o.tag = 'i'; o.i = x; return o; }
  static OVal F(double x) { OVal o; o.tag = 'f'; o.f = x; return o; }
  static OVal B(bool x) { OVal o; o.tag = 'b'; o.b = x; return o; }

  static bool truth(const OVal& v) {
    if (v.tag != 'b') fail();
    return v.b;
  }
  static bool numeric(const OVal& v) { return v.tag == 'i' || v.tag == 'f'; }
  static double num(const OVal& v) { return v.tag == 'i' ? static_cast<double>(v.i) : v.f; }

  static bool same(const OVal& a, const OVal& b) {
    if (numeric(a) && numeric(b)) return a.tag == 'i' && b.tag == 'i' ? a.i == b.i : num(a) == num(b);
    if (a.tag != b.tag) return false;
    if (a.tag == 's') return a.s == b.s;
    if (a.tag == 'b') return a.b == b.b;
    if (a.l.size() != b.l.size()) return false;
    for (std::size_t k = 0; k < a.l.size(); ++k)
      if (!same(a.l[k], b.l[k])) return false;
    return true;
  }

  static std::string text(const OVal& v) {
    switch (v.tag) {
      case 'i': return std::to_string(v.i);
      case 'f': {
        char buf[64];
        auto r = std::to_chars(buf, buf + 64, v.f);
        return std::string(buf, r.ptr);
      }
      case 's': return v.s;
      case 'b': return v.b ? "true" : "false";
      default: {
        std::string out;
        for (std::size_t k = 0; k < v.l.size(); ++k) out += (k ? ", " : "") + text(v.l[k]);
        return out;
      }
    }
  }

  void list_guard(const OVal& v) const {
    if (v.tag == 'l' && v.l.size() > max_list_) throw Fail{OracleResult::Status::ListLimit};
  }

  std::optional<OVal> block(const dsl::Block& b) {
    for (const auto& st : b) {
      if (auto* a = std::get_if<dsl::Assign>(&st.node)) {
        vars_[a->target] = ev(a->value);
      } else if (auto* ap = std::get_if<dsl::Append>(&st.node)) {
        OVal item = ev(ap->value);
        if (!vars_.count(ap->target) || vars_[ap->target].tag != 'l') fail();
        if (vars_[ap->target].l.size() + 1 > max_list_) throw Fail{OracleResult::Status::ListLimit};
        vars_[ap->target].l.push_back(item);
      } else if (auto* r = std::get_if<dsl::Return>(&st.node)) {
        return ev(r->value);
      } else if (auto* iff = std::get_if<dsl::If>(&st.node)) {
        bool taken = false;
        for (const auto& br : iff->branches) {
          if (truth(ev(br.cond))) {
            taken = true;
            if (auto ret = block(br.body)) return ret;
            break;
          }
        }
        if (!taken)
          if (auto ret = block(iff->otherwise)) return ret;
      } else if (auto* fe = std::get_if<dsl::ForEach>(&st.node)) {
        OVal seq = ev(fe->iterable);
        if (seq.tag != 'l') fail();
        list_guard(seq);
        for (const auto& item : seq.l) {
          vars_[fe->var] = item;
          if (auto ret = block(fe->body)) return ret;
        }
      }
    }
    return std::nullopt;
  }

  OVal ev(const dsl::Expr& e) {
    using namespace dsl;
    if (auto* lit = std::get_if<Literal>(&e.node)) return from_value(lit->value);
    if (auto* n = std::get_if<NameRef>(&e.node)) {
      auto it = vars_.find(n->name);
      if (it == vars_.end()) fail();
      return it->second;
    }
    if (auto* rc = std::get_if<RetrieveCall>(&e.node)) {
      if (calls_ == max_calls_) throw Fail{OracleResult::Status::RetrieveLimit};
      std::string q;
      for (const auto& seg : rc->question.segments) {
        if (auto* s = std::get_if<std::string>(&seg)) {
          q += *s;
        } else {
          auto it = vars_.find(std::get<FormatString::Interp>(seg).name);
          if (it == vars_.end()) fail();
          q += text(it->second);
        }
      }
      if (q.empty()) fail();
      ++calls_;
      auto resp = r_.retrieve({q, rc->kind});
      if (resp.is_rejected()) {
        rejected_ = true;
        switch (rc->kind) {
          case ValueKind::Int: return I(0);
          case ValueKind::Float: return F(0.0);
          case ValueKind::Bool: return B(false);
          case ValueKind::Str: { OVal o; o.tag = 's'; return o; }
          case ValueKind::List: { OVal o; o.tag = 'l'; return o; }
        }
      }
      if (resp.is_error() || resp.get_value().kind() != rc->kind) {
        backend_ = true;
        fail();
      }
      OVal v = from_value(resp.get_value());
      list_guard(v);
      return v;
    }
    if (auto* u = std::get_if<Unary>(&e.node)) {
      OVal v = ev(*u->operand);
      if (u->op == UnaryOp::Not) return B(!truth(v));
      if (v.tag == 'i') {
        if (v.i == INT64_MIN) fail();
        return I(-v.i);
      }
      if (v.tag == 'f') return F(-v.f);
      fail();
    }
    if (auto* bin = std::get_if<Binary>(&e.node)) {
      if (bin->op == BinaryOp::And) return B(truth(ev(*bin->lhs)) ? truth(ev(*bin->rhs)) : false);
      if (bin->op == BinaryOp::Or) return B(truth(ev(*bin->lhs)) ? true : truth(ev(*bin->rhs)));
      OVal a = ev(*bin->lhs);
      OVal b = ev(*bin->rhs);
      switch (bin->op) {
        case BinaryOp::Eq: return B(same(a, b));
        case BinaryOp::Ne: return B(!same(a, b));
        case BinaryOp::Add:
        case BinaryOp::Sub: {
          if (!numeric(a) || !numeric(b)) fail();
          bool add = bin->op == BinaryOp::Add;
          if (a.tag == 'i' && b.tag == 'i') {
            // Overflow check in 128-bit arithmetic.
            __int128 wide = add ? static_cast<__int128>(a.i) + b.i : static_cast<__int128>(a.i) - b.i;
            if (wide > INT64_MAX || wide < INT64_MIN) fail();
            return I(static_cast<std::int64_t>(wide));
          }
          return F(add ? num(a) + num(b) : num(a) - num(b));
        }
        default: {
          bool lt, gt;
          if (numeric(a) && numeric(b)) {
            if (a.tag == 'i' && b.tag == 'i') {
              lt = a.i < b.i;
              gt = a.i > b.i;
            } else {
              lt = num(a) < num(b);
              gt = num(a) > num(b);
            }
          } else if (a.tag == 's' && b.tag == 's') {
            lt = a.s < b.s;
            gt = a.s > b.s;
          } else {
            fail();
          }
          if (bin->op == BinaryOp::Lt) return B(lt);
          if (bin->op == BinaryOp::Gt) return B(gt);
          if (bin->op == BinaryOp::Le) return B(!gt);
          return B(!lt);
        }
      }
    }
    if (auto* ix = std::get_if<Index>(&e.node)) {
      OVal t = ev(*ix->target);
      OVal k = ev(*ix->index);
      if (t.tag != 'l' || k.tag != 'i') fail();
      if (k.i < 0 || k.i >= static_cast<std::int64_t>(t.l.size())) fail();
      return t.l[static_cast<std::size_t>(k.i)];
    }
    if (auto* bc = std::get_if<BuiltinCall>(&e.node)) {
      OVal v = ev(*bc->arg);
      switch (bc->fn) {
        case Builtin::Len:
          if (v.tag == 'l') return I(static_cast<std::int64_t>(v.l.size()));
          if (v.tag == 's') return I(static_cast<std::int64_t>(v.s.size()));
          fail();
        case Builtin::All:
        case Builtin::Any: {
          if (v.tag != 'l') fail();
          for (const auto& x : v.l)
            if (x.tag != 'b') fail();
          bool want = bc->fn == Builtin::Any;
          for (const auto& x : v.l)
            if (x.b == want) return B(want);
          return B(!want);
        }
        case Builtin::Set: {
          if (v.tag != 'l') fail();
          OVal out;
          out.tag = 'l';
          for (const auto& x : v.l) {
            bool dup = false;
            for (const auto& y : out.l) dup = dup || same(x, y);
            if (!dup) out.l.push_back(x);
          }
          return out;
        }
      }
    }
    if (auto* ll = std::get_if<ListLiteral>(&e.node)) {
      if (ll->items.size() > max_list_) throw Fail{OracleResult::Status::ListLimit};
      OVal out;
      out.tag = 'l';
      for (const auto& item : ll->items) out.l.push_back(ev(item));
      return out;
    }
    const auto& c = std::get<Conditional>(e.node);
    return truth(ev(*c.cond)) ? ev(*c.then) : ev(*c.otherwise);
  }

  Retriever& r_;
  std::size_t max_calls_;
  std::size_t max_list_;
  std::map<std::string, OVal> vars_;
  std::size_t calls_ = 0;
  bool rejected_ = false;
  bool backend_ = false;
};

}  // namespace ccl::testkit
