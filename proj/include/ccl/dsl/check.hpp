#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "ccl/dsl/ast.hpp"

namespace ccl::dsl {

/// Static properties required of a well-formed policy program.
struct CheckReport {
  bool all_params_used = false;
  std::vector<std::string> unused_params;
  std::size_t static_retrieve_count = 0;
  bool meets_min_retrieves = false;
  bool every_path_returns = false;

  bool ok() const { return all_params_used && meets_min_retrieves && every_path_returns; }
};

inline constexpr std::size_t kMinRetrieveCalls = 2;

inline std::size_t count_static_retrieves(const Program& program) {
  std::size_t count = 0;
  visit_exprs(program.body, [&](const Expr& e) {
    if (std::holds_alternative<RetrieveCall>(e.node)) ++count;
  });
  return count;
}

inline bool block_always_returns(const Block& block) {
  for (const auto& stmt : block) {
    if (std::holds_alternative<Return>(stmt.node)) return true;
    if (const auto* s = std::get_if<If>(&stmt.node)) {
      if (s->otherwise.empty()) continue;
      bool all = block_always_returns(s->otherwise);
      for (const auto& br : s->branches) all = all && block_always_returns(br.body);
      if (all) return true;
    }
    // A loop body may run zero times, so it never guarantees a return.
  }
  return false;
}

/// Names referenced anywhere in the body, including f-string interpolations.
inline std::set<std::string> referenced_names(const Program& program) {
  std::set<std::string> names;
  visit_exprs(program.body, [&](const Expr& e) {
    if (const auto* n = std::get_if<NameRef>(&e.node)) names.insert(n->name);
    if (const auto* r = std::get_if<RetrieveCall>(&e.node))
      for (const auto& seg : r->question.segments)
        if (const auto* i = std::get_if<FormatString::Interp>(&seg)) names.insert(i->name);
  });
  std::vector<const Block*> pending{&program.body};
  while (!pending.empty()) {
    const Block* block = pending.back();
    pending.pop_back();
    for (const auto& stmt : *block) {
      if (const auto* a = std::get_if<Append>(&stmt.node)) names.insert(a->target);
      if (const auto* i = std::get_if<If>(&stmt.node)) {
        for (const auto& br : i->branches) pending.push_back(&br.body);
        pending.push_back(&i->otherwise);
      }
      if (const auto* f = std::get_if<ForEach>(&stmt.node)) pending.push_back(&f->body);
    }
  }
  return names;
}

inline CheckReport check_program(const Program& program) {
  CheckReport report;
  auto used = referenced_names(program);
  for (const auto& p : program.params)
    if (!used.count(p.name)) report.unused_params.push_back(p.name);
  report.all_params_used = report.unused_params.empty();
  report.static_retrieve_count = count_static_retrieves(program);
  report.meets_min_retrieves = report.static_retrieve_count >= kMinRetrieveCalls;
  report.every_path_returns = block_always_returns(program.body);
  return report;
}

}  // namespace ccl::dsl
