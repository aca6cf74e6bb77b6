#pragma once

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ccl/data_model.hpp"
#include "ccl/dsl/check.hpp"
#include "ccl/dsl/format.hpp"
#include "ccl/eval.hpp"
#include "ccl/remote_retriever.hpp"
#include "ccl/retriever.hpp"
#include "ccl/reward.hpp"
#include "ccl/runtime.hpp"
#include "ccl/sim.hpp"

namespace ccl::cli {

enum ExitCode { kOk = 0, kFailure = 1, kUsage = 2, kBackend = 3 };

/// Bad invocation or configuration; maps to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Assertion-style failure reported after a successful run; maps to exit code 1.
class CheckFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string fmt(const char* pattern, double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, value);
  return buf;
}

inline std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::vector<nlohmann::json> read_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::vector<nlohmann::json> rows;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto row = nlohmann::json::parse(text, nullptr, false);
    if (row.is_discarded()) throw std::runtime_error(path + ":" + std::to_string(line) + ": malformed JSON");
    rows.push_back(std::move(row));
  }
  return rows;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
}

inline std::string utc_timestamp() {
  auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// --- shared options --------------------------------------------------------

struct RetrieverOptions {
  std::string backend = "mock";
  std::string facts;
  RemoteRetrieverConfig remote;

  void add_to(CLI::App& cmd) {
    cmd.add_option("--retriever", backend, "Retriever backend")->check(CLI::IsMember({"mock", "remote"}));
    cmd.add_option("--facts", facts, "Fact table JSONL for the mock backend");
    cmd.add_option("--endpoint", remote.endpoint, "Chat-completion URL (env CCL_ENDPOINT)");
    cmd.add_option("--model", remote.model, "Retriever model name (env CCL_MODEL)");
    cmd.add_option("--temperature", remote.temperature, "Retriever sampling temperature");
    cmd.add_option("--timeout-ms", remote.timeout_ms, "Per-request timeout");
    cmd.add_option("--retries", remote.max_retries, "Retries on transport errors, 429 and 5xx");
    cmd.add_option("--max-in-flight", remote.max_in_flight, "Concurrent request cap");
  }

  std::unique_ptr<Retriever> build() {
    if (backend == "mock") {
      if (facts.empty()) throw UsageError("the mock retriever requires --facts");
      return std::make_unique<MockRetriever>(FactTable::load(facts));
    }
    if (remote.endpoint.empty())
      if (const char* env = std::getenv("CCL_ENDPOINT")) remote.endpoint = env;
    if (const char* env = std::getenv("CCL_MODEL"); env && remote.model == RemoteRetrieverConfig{}.model)
      remote.model = env;
    if (remote.endpoint.empty()) throw UsageError("the remote retriever requires --endpoint or CCL_ENDPOINT");
    try {
      return std::make_unique<RemoteRetriever>(remote);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }

  nlohmann::json describe() const {
    if (backend == "mock") return {{"kind", "mock"}, {"facts", facts}};
    return {{"kind", "remote"},           {"endpoint", remote.endpoint},       {"model", remote.model},
            {"temperature", remote.temperature}, {"timeout_ms", remote.timeout_ms}, {"max_retries", remote.max_retries},
            {"prompt_template", remote.prompt_template}};
  }
};

struct LimitOptions {
  ExecutionLimits limits;
  void add_to(CLI::App& cmd) {
    cmd.add_option("--max-retrieves", limits.max_retrieve_calls, "Retrieve calls per execution");
    cmd.add_option("--max-steps", limits.max_steps, "Interpreter steps per execution");
    cmd.add_option("--max-list", limits.max_list_len, "Maximum list length");
  }
  nlohmann::json describe() const {
    return {{"max_retrieves", limits.max_retrieve_calls},
            {"max_steps", limits.max_steps},
            {"max_list", limits.max_list_len}};
  }
};

inline const CohortInstance& find_cohort(const std::vector<CohortInstance>& cohorts, const std::string& id) {
  if (id.empty()) {
    if (cohorts.size() != 1) throw UsageError("several cohorts loaded; pick one with --cohort-id");
    return cohorts.front();
  }
  for (const auto& c : cohorts)
    if (c.cohort_id == id) return c;
  throw UsageError("no cohort with id '" + id + "'");
}

// --- validate --------------------------------------------------------------

inline int cmd_validate(const std::string& path, std::ostream& out) {
  auto cohorts = load_cohorts(path);
  if (cohorts.empty()) {
    out << "0 cohorts in " << path << "\n";
    return kOk;
  }
  int bad = 0;
  for (const auto& c : cohorts) {
    auto report = validate_cohort(c);
    if (report.ok()) {
      out << "ok    " << c.cohort_id << "\n";
      continue;
    }
    ++bad;
    out << "FAIL  " << c.cohort_id << "\n";
    for (const auto& p : report.template_problems) out << "      template: " << p << "\n";
    if (!report.cohort_size_ok) out << "      cohort size " << c.size() << ", expected " << kCohortSize << "\n";
    for (const auto& m : report.members)
      if (!m.ok()) out << "      member " << m.member << ": " << m.detail << "\n";
  }
  out << cohorts.size() << " cohorts, " << bad << " failed\n";
  return bad ? kFailure : kOk;
}

// --- check -----------------------------------------------------------------

inline int cmd_check(const std::string& program_path, const std::string& header, bool print_canonical,
                     std::ostream& out) {
  auto source = read_file(program_path);
  dsl::Program program;
  try {
    program = header.empty() ? dsl::parse_program(source) : dsl::parse_program(source, header);
  } catch (const dsl::ParseError& e) {
    out << nlohmann::json{{"program", program_path}, {"parsed", false}, {"error", e.what()}}.dump() << "\n";
    return kFailure;
  }
  auto report = dsl::check_program(program);
  nlohmann::json j{{"program", program_path},
                   {"parsed", true},
                   {"signature", dsl::describe_signature(program.params)},
                   {"all_params_used", report.all_params_used},
                   {"unused_params", report.unused_params},
                   {"static_retrieve_count", report.static_retrieve_count},
                   {"meets_min_retrieves", report.meets_min_retrieves},
                   {"every_path_returns", report.every_path_returns},
                   {"ok", report.ok()}};
  out << j.dump() << "\n";
  if (print_canonical) out << dsl::format_program(program);
  return report.ok() ? kOk : kFailure;
}

// --- exec ------------------------------------------------------------------

inline int cmd_exec(const std::string& program_path, const std::vector<CohortInstance>& cohorts,
                    const std::string& cohort_id, std::size_t member, Retriever& retriever,
                    const ExecutionLimits& limits, std::ostream& out) {
  const auto& cohort = find_cohort(cohorts, cohort_id);
  if (member >= cohort.size()) throw UsageError("member index out of range");
  auto program = parse_for_template(read_file(program_path), cohort.tmpl);
  const auto& q = cohort.member(member);
  auto result = execute(program, bind_parameters(program, q.bindings), retriever, limits);
  for (const auto& ev : result.trace) out << event_to_json(ev).dump() << "\n";
  nlohmann::json summary{{"cohort_id", cohort.cohort_id},
                         {"member", member},
                         {"status", status_label(result.status)},
                         {"calls", result.dynamic_retrieve_count()},
                         {"rejected", result.was_rejected},
                         {"gold", q.gold_index}};
  if (auto a = result.answer()) summary["answer"] = *a;
  out << summary.dump() << "\n";
  return result.backend_error ? kBackend : kOk;
}

// --- eval ------------------------------------------------------------------

struct EvalOptions {
  std::string cohorts;
  std::vector<std::string> program_files;  // applied to every cohort
  std::string programs_jsonl;              // rows {"cohort_id", "program"}
  std::string criterion = "strict";
  int k = 0;  // 0 = use every supplied sample
  double z = kWaldZ95;
  std::size_t jobs = 0;
  std::uint64_t seed = 0;
  std::string out_json;
  std::string outcomes_jsonl;
  std::string traces_jsonl;
  bool no_timestamp = false;
  double min_pass_rate = -1;
};

inline nlohmann::json outcome_to_json(const CohortOutcome& o, const std::string& domain, bool pass) {
  nlohmann::json members = nlohmann::json::array();
  for (const auto& m : o.members) {
    nlohmann::json mj{{"correct", m.correct}, {"rejected", m.rejected}, {"calls", m.dynamic_calls}};
    if (m.answered_index) mj["answer"] = *m.answered_index;
    else mj["failure"] = m.failure;
    members.push_back(std::move(mj));
  }
  return {{"cohort_id", o.cohort_id}, {"domain", domain},           {"n_correct", o.n_correct},
          {"n_calls", o.summary.n_calls}, {"n_rejected", o.n_rejected}, {"pass", pass},
          {"members", members}};
}

inline std::string accuracy_table(const AccuracyReport& r, const std::string& title) {
  std::ostringstream s;
  s << title << "\n";
  s << pad("Domain", 16) << pad("N", 8) << pad("Pass", 8) << "Accuracy (%)\n";
  auto row = [&](const std::string& name, const AccuracyCell& c) {
    s << pad(name, 16) << pad(std::to_string(c.n), 8) << pad(std::to_string(c.passes), 8)
      << fmt("%.1f", 100 * c.pass_rate) << " ± " << fmt("%.1f", 100 * c.ci_halfwidth) << "\n";
  };
  for (const auto& [d, c] : r.per_domain) row(d, c);
  row("Overall", r.overall);
  return s.str();
}

inline int cmd_eval(EvalOptions opt, RetrieverOptions& ropt, const LimitOptions& lopt, std::ostream& out) {
  auto criterion = EvalCriterion::parse(opt.criterion);
  auto cohorts = load_cohorts(opt.cohorts);
  if (cohorts.empty()) throw CheckFailed("no cohorts in " + opt.cohorts);
  if (opt.program_files.empty() == opt.programs_jsonl.empty())
    throw UsageError("give either --program (repeatable) or --programs");
  if (opt.k < 0) throw UsageError("--k must be >= 1");

  // Program sources per cohort, in sample order.
  std::map<std::string, std::vector<std::string>> sources;
  if (!opt.program_files.empty()) {
    std::vector<std::string> shared;
    for (const auto& f : opt.program_files) shared.push_back(read_file(f));
    for (const auto& c : cohorts) sources[c.cohort_id] = shared;
  } else {
    for (const auto& row : read_jsonl(opt.programs_jsonl)) {
      if (!row.contains("cohort_id") || !row.contains("program") || !row["program"].is_string())
        throw std::runtime_error(opt.programs_jsonl + ": rows need 'cohort_id' and 'program'");
      sources[row["cohort_id"].get<std::string>()].push_back(row["program"].get<std::string>());
    }
  }

  auto retriever = ropt.build();
  std::size_t jobs = opt.jobs ? opt.jobs : std::max(1u, std::thread::hardware_concurrency());
  if (!retriever->concurrent_safe()) jobs = 1;

  struct Item {
    CohortOutcome outcome;
    bool pass = false;
    std::string parse_error;
  };
  auto items = parallel_map(cohorts.size(), jobs, [&](std::size_t i) {
    const auto& c = cohorts[i];
    Item item;
    item.outcome.cohort_id = c.cohort_id;
    auto it = sources.find(c.cohort_id);
    std::vector<dsl::Program> programs;
    try {
      if (it == sources.end() || it->second.empty()) throw std::runtime_error("no program for cohort");
      std::size_t k = opt.k ? static_cast<std::size_t>(opt.k) : it->second.size();
      if (k > it->second.size())
        throw std::runtime_error("--k " + std::to_string(k) + " exceeds " + std::to_string(it->second.size()) +
                                 " supplied samples");
      for (std::size_t s = 0; s < k; ++s) programs.push_back(parse_for_template(it->second[s], c.tmpl));
    } catch (const std::exception& e) {
      item.parse_error = e.what();
      return item;
    }
    item.outcome = self_consistency(programs, c, *retriever, lopt.limits);
    item.pass = apply_criterion(item.outcome, criterion);
    return item;
  });

  std::vector<std::pair<std::string, bool>> passes;
  nlohmann::json outcomes = nlohmann::json::array();
  std::string outcome_lines, trace_lines;
  bool backend_error = false;
  for (std::size_t i = 0; i < cohorts.size(); ++i) {
    const auto& domain = cohorts[i].tmpl.domain_tag;
    const auto& item = items[i];
    passes.emplace_back(domain, item.pass);
    nlohmann::json oj;
    if (!item.parse_error.empty()) {
      oj = {{"cohort_id", cohorts[i].cohort_id}, {"domain", domain}, {"pass", false}, {"error", item.parse_error}};
    } else {
      oj = outcome_to_json(item.outcome, domain, item.pass);
      backend_error = backend_error || item.outcome.any_backend_error();
      outcome_lines += nlohmann::json{{"cohort_id", item.outcome.cohort_id},
                                      {"sample_index", 0},
                                      {"n_correct", item.outcome.n_correct},
                                      {"n_calls", item.outcome.summary.n_calls},
                                      {"n_rejected", item.outcome.n_rejected}}
                           .dump() +
                       "\n";
      for (std::size_t m = 0; m < item.outcome.traces.size(); ++m)
        for (const auto& ev : item.outcome.traces[m]) {
          auto ej = event_to_json(ev);
          ej["cohort_id"] = item.outcome.cohort_id;
          ej["member"] = m;
          trace_lines += ej.dump() + "\n";
        }
    }
    outcomes.push_back(std::move(oj));
  }
  auto report = aggregate(passes, opt.z);

  nlohmann::json config{{"criterion", std::string(criterion.name())},
                        {"threshold", criterion.threshold()},
                        {"k", opt.k},
                        {"z", opt.z},
                        {"retriever", ropt.describe()},
                        {"limits", lopt.describe()},
                        {"cohorts", opt.cohorts}};
  nlohmann::json doc{{"kind", "eval"}, {"seed", opt.seed}, {"config", config},
                     {"report", report_to_json(report)}, {"outcomes", outcomes}};
  if (!opt.no_timestamp) doc["timestamp"] = utc_timestamp();

  out << "seed " << opt.seed << "\n";
  out << accuracy_table(report, "criterion " + std::string(criterion.name()) + " (>= " +
                                    std::to_string(criterion.threshold()) + "/6)");
  if (!opt.out_json.empty()) write_text(opt.out_json, doc.dump(2) + "\n");
  if (!opt.outcomes_jsonl.empty()) write_text(opt.outcomes_jsonl, outcome_lines);
  if (!opt.traces_jsonl.empty()) write_text(opt.traces_jsonl, trace_lines);

  if (backend_error) return kBackend;
  if (opt.min_pass_rate >= 0 && report.overall.pass_rate < opt.min_pass_rate)
    throw CheckFailed("overall pass rate " + fmt("%.4f", report.overall.pass_rate) + " below " +
                      fmt("%.4f", opt.min_pass_rate));
  return kOk;
}

// --- reward ----------------------------------------------------------------

inline int cmd_reward(const std::string& outcomes_path, const std::string& variant, std::ostream& out) {
  auto v = parse_variant(variant);
  for (const auto& row : read_jsonl(outcomes_path)) {
    CohortExecutionSummary s;
    try {
      s.n_correct = row.at("n_correct").get<int>();
      s.n_calls = row.at("n_calls").get<int>();
      s.n_rejected = row.at("n_rejected").get<int>();
    } catch (const nlohmann::json::exception&) {
      throw std::runtime_error(outcomes_path + ": rows need integer n_correct, n_calls, n_rejected");
    }
    out << reward_record(row.value("cohort_id", ""), row.value("sample_index", 0), s, cohort_reward(s, v)).dump()
        << "\n";
  }
  return kOk;
}

// --- sim -------------------------------------------------------------------

struct SimOptions {
  std::string variant = "cohort";
  std::string pool;
  std::string cohorts;
  ToyTrainConfig config;
  std::string out_jsonl;
  bool compare = false;
};

inline int cmd_sim(SimOptions opt, RetrieverOptions& ropt, const LimitOptions& lopt, std::ostream& out) {
  auto cohorts = load_cohorts(opt.cohorts);
  if (cohorts.empty()) throw UsageError("no cohorts in " + opt.cohorts);
  auto pool = load_pool(opt.pool, cohorts.front().tmpl);
  auto retriever = ropt.build();
  opt.config.limits = lopt.limits;
  try {
    opt.config.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  out << "seed " << opt.config.seed << "\n";
  if (opt.compare) {
    auto cmp = compare_variants(pool, cohorts, *retriever, opt.config);
    for (const auto& r : cmp.modes) out << pad(std::string(mode_name(r.mode)), 8) << "P(shortcut) " << fmt("%.6f", r.p_shortcut) << "\n";
    if (!opt.out_jsonl.empty()) write_text(opt.out_jsonl, comparison_to_json(cmp, pool).dump() + "\n");
    return kOk;
  }
  opt.config.mode = parse_mode(opt.variant);
  auto log = run_toy_training(opt.config, pool, cohorts, *retriever);
  out << "variant " << mode_name(log.mode) << ", " << log.updates.size() << " updates\n";
  for (std::size_t i = 0; i < pool.size(); ++i)
    out << pad(pool[i].label, 20) << fmt("%.6f", log.final_probabilities[i]) << (pool[i].shortcut ? "  shortcut" : "")
        << "\n";
  out << "P(shortcut) " << fmt("%.6f", shortcut_mass(pool, log.final_probabilities)) << "\n";
  if (!opt.out_jsonl.empty()) write_text(opt.out_jsonl, training_log_jsonl(log));
  return kOk;
}

// --- stats -----------------------------------------------------------------

/// Labels come as a JSON object {question: category} or JSONL rows {"q", "category"}.
inline std::map<std::string, std::string> load_labels(const std::string& path) {
  auto text = read_file(path);
  std::map<std::string, std::string> labels;
  auto doc = nlohmann::json::parse(text, nullptr, false);
  if (!doc.is_discarded() && doc.is_object()) {
    if (!doc.contains("q")) {
      for (const auto& [q, cat] : doc.items()) labels[q] = cat.get<std::string>();
      return labels;
    }
  }
  for (const auto& row : read_jsonl(path)) {
    if (!row.contains("q") || !row.contains("category"))
      throw std::runtime_error(path + ": label rows need 'q' and 'category'");
    labels[row["q"].get<std::string>()] = row["category"].get<std::string>();
  }
  return labels;
}

inline std::string rejection_table_text(const RejectionTable& t) {
  std::ostringstream s;
  s << pad("Category", 24) << pad("Events", 8) << pad("Rejected", 10) << "Rejection Rate (%)\n";
  auto row = [&](const RejectionRow& r) {
    s << pad(r.category, 24) << pad(std::to_string(r.events), 8) << pad(std::to_string(r.rejected), 10)
      << fmt("%.1f", 100 * r.rate()) << "\n";
  };
  for (const auto& r : t.rows) row(r);
  row(t.overall);
  return s.str();
}

inline int cmd_stats(const std::vector<std::string>& trace_files, const std::string& labels_path,
                     const std::string& out_json, std::ostream& out) {
  std::vector<TraceRecord> events;
  for (const auto& f : trace_files)
    for (const auto& row : read_jsonl(f)) events.push_back(trace_record_from_json(row));
  if (events.empty()) throw CheckFailed("no events");
  auto table = rejection_stats(events, load_labels(labels_path));
  out << rejection_table_text(table);
  if (!out_json.empty()) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : table.rows)
      rows.push_back({{"category", r.category}, {"events", r.events}, {"rejected", r.rejected}, {"rate", r.rate()}});
    nlohmann::json doc{{"kind", "stats"},
                       {"rows", rows},
                       {"overall", {{"events", table.overall.events},
                                    {"rejected", table.overall.rejected},
                                    {"rate", table.overall.rate()}}}};
    write_text(out_json, doc.dump(2) + "\n");
  }
  return kOk;
}

// --- report ----------------------------------------------------------------

/// Merges eval reports into one accuracy table (rows = reports, columns = domains) and
/// stats reports into rejection tables.
inline int cmd_report(const std::vector<std::string>& paths, std::ostream& out) {
  std::vector<std::pair<std::string, nlohmann::json>> evals, stats;
  std::set<std::string> domains;
  for (const auto& p : paths) {
    auto doc = nlohmann::json::parse(read_file(p), nullptr, false);
    if (doc.is_discarded() || !doc.is_object() || !doc.contains("kind"))
      throw std::runtime_error(p + ": not a report");
    auto label = std::filesystem::path(p).stem().string();
    if (doc["kind"] == "eval") {
      for (const auto& [d, _] : doc["report"]["domains"].items()) domains.insert(d);
      evals.emplace_back(label, std::move(doc));
    } else if (doc["kind"] == "stats") {
      stats.emplace_back(label, std::move(doc));
    } else {
      throw std::runtime_error(p + ": unknown report kind");
    }
  }
  if (!evals.empty()) {
    out << pad("Report", 24) << pad("Criterion", 10);
    for (const auto& d : domains) out << pad(d, 16);
    out << "Overall\n";
    auto cell = [](const nlohmann::json& c) {
      return fmt("%.1f", 100 * c["pass_rate"].get<double>()) + " ± " + fmt("%.1f", 100 * c["ci_halfwidth"].get<double>());
    };
    for (const auto& [label, doc] : evals) {
      out << pad(label, 24) << pad(doc["config"]["criterion"].get<std::string>(), 10);
      for (const auto& d : domains) {
        const auto& ds = doc["report"]["domains"];
        out << pad(ds.contains(d) ? cell(ds[d]) : std::string("-"), 16);
      }
      out << cell(doc["report"]["overall"]) << "\n";
    }
  }
  for (const auto& [label, doc] : stats) {
    out << "\n" << label << "\n";
    RejectionTable t;
    for (const auto& r : doc["rows"])
      t.rows.push_back({r["category"].get<std::string>(), r["events"].get<std::size_t>(), r["rejected"].get<std::size_t>()});
    t.overall.events = doc["overall"]["events"].get<std::size_t>();
    t.overall.rejected = doc["overall"]["rejected"].get<std::size_t>();
    out << rejection_table_text(t);
  }
  return kOk;
}

// --- entry point -----------------------------------------------------------

inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cohort program harness: parse, check, execute and score answer(...) programs"};
  app.name("ccl");
  app.require_subcommand(1);

  RetrieverOptions ropt;
  LimitOptions lopt;

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Validate a cohort JSONL file");
  validate->add_option("cohorts", validate_path, "Cohort JSONL")->required();

  std::string check_path, check_header;
  bool check_canonical = false;
  auto* check = app.add_subcommand("check", "Parse a program and run static checks");
  check->add_option("program", check_path, "Program source")->required();
  check->add_option("--header", check_header, "Required function header");
  check->add_flag("--canonical", check_canonical, "Print the canonical formatting");

  std::string exec_program, exec_cohorts, exec_cohort_id;
  std::size_t exec_member = 0;
  auto* exec = app.add_subcommand("exec", "Run one program on one cohort member and print its trace");
  exec->add_option("program", exec_program, "Program source")->required();
  exec->add_option("--cohorts", exec_cohorts, "Cohort JSONL")->required();
  exec->add_option("--cohort-id", exec_cohort_id, "Cohort to use when the file holds several");
  exec->add_option("--member", exec_member, "0 = original, 1..5 = variants");
  ropt.add_to(*exec);
  lopt.add_to(*exec);

  EvalOptions eopt;
  auto* eval = app.add_subcommand("eval", "Evaluate programs on their cohorts");
  eval->add_option("--cohorts", eopt.cohorts, "Cohort JSONL")->required();
  eval->add_option("--program", eopt.program_files, "Program applied to every cohort; repeat for k samples");
  eval->add_option("--programs", eopt.programs_jsonl, "JSONL rows {cohort_id, program}");
  eval->add_option("--criterion", eopt.criterion, "strict or lenient")->check(CLI::IsMember({"strict", "lenient"}));
  eval->add_option("--k", eopt.k, "Samples per cohort for the majority vote (default: all)");
  eval->add_option("--z", eopt.z, "Normal quantile for the Wald interval");
  eval->add_option("--jobs", eopt.jobs, "Worker threads (default: available cores)");
  eval->add_option("--seed", eopt.seed, "Seed recorded in the report");
  eval->add_option("--out", eopt.out_json, "JSON report path");
  eval->add_option("--outcomes", eopt.outcomes_jsonl, "Per-cohort outcome JSONL path");
  eval->add_option("--traces", eopt.traces_jsonl, "Retrieve trace JSONL path");
  eval->add_option("--min-pass-rate", eopt.min_pass_rate, "Exit 1 when the overall pass rate is lower");
  eval->add_flag("--no-timestamp", eopt.no_timestamp, "Omit the report timestamp");
  ropt.add_to(*eval);
  lopt.add_to(*eval);

  std::string reward_path, reward_variant = "cohort";
  auto* reward = app.add_subcommand("reward", "Recompute reward records from outcome JSONL");
  reward->add_option("outcomes", reward_path, "Outcome JSONL")->required();
  reward->add_option("--variant", reward_variant, "cohort or normal")->check(CLI::IsMember({"cohort", "normal"}));

  SimOptions sopt;
  auto* sim = app.add_subcommand("sim", "Train the toy program policy");
  sim->add_option("--variant", sopt.variant, "cohort, normal or org")->check(CLI::IsMember({"cohort", "normal", "org"}));
  sim->add_option("--updates", sopt.config.updates, "Policy updates");
  sim->add_option("--rollouts", sopt.config.rollouts_per_update, "Rollouts per update");
  sim->add_option("--lr", sopt.config.learning_rate, "Learning rate");
  sim->add_option("--seed", sopt.config.seed, "Sampling seed");
  sim->add_option("--pool", sopt.pool, "Program pool JSONL")->required();
  sim->add_option("--cohorts", sopt.cohorts, "Cohort JSONL")->required();
  sim->add_option("--out", sopt.out_jsonl, "Training log JSONL path");
  sim->add_flag("--compare", sopt.compare, "Train under every variant from the same seed");
  ropt.add_to(*sim);
  lopt.add_to(*sim);

  std::vector<std::string> stats_traces;
  std::string stats_labels, stats_out;
  auto* stats = app.add_subcommand("stats", "Rejection rates per question category");
  stats->add_option("traces", stats_traces, "Trace JSONL files")->required();
  stats->add_option("--labels", stats_labels, "Question to category map")->required();
  stats->add_option("--out", stats_out, "JSON report path");

  std::vector<std::string> report_paths;
  auto* report = app.add_subcommand("report", "Merge JSON reports into text tables");
  report->add_option("reports", report_paths, "eval or stats JSON reports")->required();

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (*validate) return cmd_validate(validate_path, out);
    if (*check) return cmd_check(check_path, check_header, check_canonical, out);
    if (*exec) {
      auto retriever = ropt.build();
      return cmd_exec(exec_program, load_cohorts(exec_cohorts), exec_cohort_id, exec_member, *retriever,
                      lopt.limits, out);
    }
    if (*eval) return cmd_eval(eopt, ropt, lopt, out);
    if (*reward) return cmd_reward(reward_path, reward_variant, out);
    if (*sim) return cmd_sim(sopt, ropt, lopt, out);
    if (*stats) return cmd_stats(stats_traces, stats_labels, stats_out, out);
    if (*report) return cmd_report(report_paths, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kUsage;
}

inline int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args, out, err);
}

}  // namespace ccl::cli
