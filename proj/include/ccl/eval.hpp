#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "ccl/data_model.hpp"
#include "ccl/reward.hpp"
#include "ccl/runtime.hpp"

namespace ccl {

// --- criteria --------------------------------------------------------------

enum class CriterionKind { Strict, Lenient };

struct EvalCriterion {
  CriterionKind kind = CriterionKind::Strict;

  int threshold() const { return kind == CriterionKind::Strict ? 5 : 4; }
  std::string_view name() const { return kind == CriterionKind::Strict ? "strict" : "lenient"; }

  static EvalCriterion strict() { return {CriterionKind::Strict}; }
  static EvalCriterion lenient() { return {CriterionKind::Lenient}; }
  static EvalCriterion parse(std::string_view s) {
    if (s == "strict") return strict();
    if (s == "lenient") return lenient();
    throw std::invalid_argument("unknown criterion '" + std::string(s) + "'");
  }
};

// --- cohort execution ------------------------------------------------------

struct MemberResult {
  std::optional<std::int64_t> answered_index;  // nullopt on any failure status
  std::string failure;                         // status description when not answered
  bool correct = false;
  bool rejected = false;
  bool backend_error = false;
  int dynamic_calls = 0;
};

struct CohortOutcome {
  std::string cohort_id;
  std::vector<MemberResult> members;  // members[0] is the original
  int n_correct = 0;
  int n_rejected = 0;
  CohortExecutionSummary summary;
  std::vector<std::vector<RetrieveEvent>> traces;  // per member

  bool any_backend_error() const {
    return std::any_of(members.begin(), members.end(), [](const MemberResult& m) { return m.backend_error; });
  }
};

inline MemberResult score_member(const ExecutionResult& r, int gold_index, std::size_t option_count) {
  MemberResult m;
  m.dynamic_calls = static_cast<int>(r.dynamic_retrieve_count());
  m.rejected = r.was_rejected;
  m.backend_error = r.backend_error;
  if (auto a = r.answer()) {
    if (*a >= static_cast<std::int64_t>(option_count)) {
      m.failure = "option index " + std::to_string(*a) + " out of range";
    } else {
      m.answered_index = *a;
      m.correct = *a == gold_index;
    }
  } else {
    m.failure = status_label(r.status);
  }
  return m;
}

inline void finalize_outcome(CohortOutcome& out) {
  out.n_correct = static_cast<int>(std::count_if(out.members.begin(), out.members.end(),
                                                 [](const MemberResult& m) { return m.correct; }));
  out.n_rejected = static_cast<int>(std::count_if(out.members.begin(), out.members.end(),
                                                  [](const MemberResult& m) { return m.rejected; }));
  out.summary.n_correct = out.n_correct;
  out.summary.n_rejected = out.n_rejected;
  // Retrieve calls are counted on the original question's execution.
  out.summary.n_calls = out.members.empty() ? 0 : out.members.front().dynamic_calls;
}

/// Runs a program independently on the original and every variant of a cohort.
/// When the retriever allows it, the members run on separate threads.
inline CohortOutcome run_cohort(const dsl::Program& program, const CohortInstance& cohort,
                                Retriever& retriever, const ExecutionLimits& limits = {}) {
  auto expected = dsl::parse_header(cohort.tmpl.function_header);
  if (program.params != expected)
    throw dsl::ParseError(dsl::ParseErrorKind::SignatureMismatch,
                          "program does not match header of cohort '" + cohort.cohort_id + "'", {1, 1});
  const std::size_t n = cohort.size();
  std::vector<ExecutionResult> results(n);
  auto run_member = [&](std::size_t i) {
    results[i] = execute(program, bind_parameters(program, cohort.member(i).bindings), retriever, limits);
  };
  if (retriever.concurrent_safe() && std::thread::hardware_concurrency() > 1) {
    std::vector<std::jthread> workers;
    for (std::size_t i = 0; i < n; ++i) workers.emplace_back(run_member, i);
  } else {
    for (std::size_t i = 0; i < n; ++i) run_member(i);
  }
  CohortOutcome out;
  out.cohort_id = cohort.cohort_id;
  for (std::size_t i = 0; i < n; ++i) {
    out.members.push_back(score_member(results[i], cohort.member(i).gold_index, cohort.tmpl.options.size()));
    out.traces.push_back(std::move(results[i].trace));
  }
  finalize_outcome(out);
  return out;
}

inline bool apply_criterion(const CohortOutcome& outcome, EvalCriterion criterion) {
  return outcome.n_correct >= criterion.threshold();
}
inline bool apply_criterion(int n_correct, EvalCriterion criterion) { return n_correct >= criterion.threshold(); }

/// Per-member plurality vote over k sampled programs. Failed executions do not vote;
/// ties and members with no votes count as incorrect. The consensus keeps the
/// rejection flags and call counts of the sample with the most rejections.
inline CohortOutcome self_consistency(const std::vector<dsl::Program>& programs, const CohortInstance& cohort,
                                      Retriever& retriever, const ExecutionLimits& limits = {}) {
  if (programs.empty()) throw std::invalid_argument("self_consistency: empty program list");
  std::vector<CohortOutcome> samples;
  samples.reserve(programs.size());
  for (const auto& p : programs) samples.push_back(run_cohort(p, cohort, retriever, limits));
  if (samples.size() == 1) return std::move(samples.front());

  std::size_t representative = 0;
  for (std::size_t s = 1; s < samples.size(); ++s)
    if (samples[s].n_rejected > samples[representative].n_rejected) representative = s;

  CohortOutcome out;
  out.cohort_id = cohort.cohort_id;
  out.traces = samples[representative].traces;
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    std::map<std::int64_t, int> votes;
    for (const auto& s : samples)
      if (s.members[i].answered_index) ++votes[*s.members[i].answered_index];
    MemberResult m = samples[representative].members[i];
    m.answered_index.reset();
    m.correct = false;
    int best = 0;
    bool tie = false;
    for (const auto& [answer, count] : votes) {
      if (count > best) {
        best = count;
        m.answered_index = answer;
        tie = false;
      } else if (count == best) {
        tie = true;
      }
    }
    if (tie || votes.empty()) {
      m.answered_index.reset();
      m.failure = votes.empty() ? "no sample answered" : "tied vote";
    } else {
      m.failure.clear();
      m.correct = *m.answered_index == cohort.member(i).gold_index;
    }
    out.members.push_back(std::move(m));
  }
  finalize_outcome(out);
  return out;
}

// --- aggregation -----------------------------------------------------------

struct AccuracyCell {
  std::size_t n = 0;
  std::size_t passes = 0;
  double pass_rate = 0;
  double ci_halfwidth = 0;
};

struct AccuracyReport {
  std::map<std::string, AccuracyCell> per_domain;
  AccuracyCell overall;
  double z = 1.96;
};

inline constexpr double kWaldZ95 = 1.96;

/// Pass rate with the Wald half-width z * sqrt(p(1-p)/n).
inline AccuracyCell wald_cell(std::size_t passes, std::size_t n, double z = kWaldZ95) {
  if (n == 0) throw std::invalid_argument("accuracy cell with n = 0");
  if (passes > n) throw std::invalid_argument("passes exceed n");
  AccuracyCell c;
  c.n = n;
  c.passes = passes;
  c.pass_rate = static_cast<double>(passes) / static_cast<double>(n);
  c.ci_halfwidth = z * std::sqrt(c.pass_rate * (1.0 - c.pass_rate) / static_cast<double>(n));
  return c;
}

inline AccuracyReport aggregate(const std::vector<std::pair<std::string, bool>>& outcomes, double z = kWaldZ95) {
  if (outcomes.empty()) throw std::invalid_argument("aggregate: no outcomes");
  std::map<std::string, std::pair<std::size_t, std::size_t>> counts;  // domain -> (passes, n)
  std::size_t passes = 0;
  for (const auto& [domain, pass] : outcomes) {
    auto& c = counts[domain];
    c.first += pass ? 1 : 0;
    c.second += 1;
    passes += pass ? 1 : 0;
  }
  AccuracyReport report;
  report.z = z;
  for (const auto& [domain, c] : counts) report.per_domain[domain] = wald_cell(c.first, c.second, z);
  report.overall = wald_cell(passes, outcomes.size(), z);
  return report;
}

inline nlohmann::json cell_to_json(const AccuracyCell& c) {
  return {{"n", c.n}, {"passes", c.passes}, {"pass_rate", c.pass_rate}, {"ci_halfwidth", c.ci_halfwidth}};
}

inline nlohmann::json report_to_json(const AccuracyReport& r) {
  nlohmann::json domains = nlohmann::json::object();
  for (const auto& [d, c] : r.per_domain) domains[d] = cell_to_json(c);
  return {{"domains", domains}, {"overall", cell_to_json(r.overall)}, {"z", r.z}};
}

// --- rejection statistics --------------------------------------------------

struct RejectionRow {
  std::string category;
  std::size_t events = 0;
  std::size_t rejected = 0;
  double rate() const { return events ? static_cast<double>(rejected) / static_cast<double>(events) : 0.0; }
};

struct RejectionTable {
  std::vector<RejectionRow> rows;  // sorted by category
  RejectionRow overall{"Overall"};
};

struct TraceRecord {
  std::string question;
  bool rejected = false;
};

/// Parses one trace export row.
inline TraceRecord trace_record_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("q") || !j["q"].is_string() || !j.contains("outcome") ||
      !j["outcome"].is_string())
    throw std::runtime_error("trace row lacks 'q' or 'outcome'");
  auto outcome = j["outcome"].get<std::string>();
  if (outcome != "value" && outcome != "rejected" && outcome != "error")
    throw std::runtime_error("unknown trace outcome '" + outcome + "'");
  return {j["q"].get<std::string>(), outcome == "rejected"};
}

/// Per-category rejected/total ratio. Every event's question must have a label.
inline RejectionTable rejection_stats(const std::vector<TraceRecord>& events,
                                      const std::map<std::string, std::string>& labels) {
  std::map<std::string, RejectionRow> rows;
  RejectionTable table;
  for (const auto& ev : events) {
    auto it = labels.find(ev.question);
    if (it == labels.end()) throw std::runtime_error("unlabeled trace question: " + ev.question);
    auto& row = rows[it->second];
    row.category = it->second;
    ++row.events;
    row.rejected += ev.rejected ? 1 : 0;
    ++table.overall.events;
    table.overall.rejected += ev.rejected ? 1 : 0;
  }
  for (auto& [_, row] : rows) table.rows.push_back(row);
  return table;
}

// --- batch evaluation ------------------------------------------------------

/// Evaluates `jobs` cohorts with up to `workers` threads; results keep input order.
template <typename Fn>
auto parallel_map(std::size_t count, std::size_t workers, Fn&& fn) {
  using R = decltype(fn(std::size_t{0}));
  std::vector<std::optional<R>> slots(count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        slots[i].emplace(fn(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  workers = std::max<std::size_t>(1, std::min(workers, count));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  std::vector<R> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (errors[i]) std::rethrow_exception(errors[i]);
    out.push_back(std::move(*slots[i]));
  }
  return out;
}

}  // namespace ccl
