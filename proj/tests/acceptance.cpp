// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "ccl/cli.hpp"
#include "support/program_gen.hpp"

using namespace ccl;

namespace {

const std::filesystem::path kData = CCL_TEST_DATA;
const std::filesystem::path kRepoData = CCL_REPO_DATA;

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Verdict {
  bool ok = true;
  std::string note;
  void require(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      note = what;
    }
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Verdict reward_algebra() {
  Verdict v;
  auto t0 = Clock::now();
  int combos = 0;
  for (int c = 0; c <= 6; ++c)
    for (int calls = 0; calls <= 2; ++calls)
      for (int rej = 0; rej <= 6; ++rej) {
        ++combos;
        for (bool gated : {true, false}) {
          double acc = gated && c < 4 ? 0.0 : c / 5.0;
          double ret = calls == 0 ? -0.6 : calls == 1 ? 0.0 : 0.6;
          double want = acc + ret - rej / 10.0;
          auto r = cohort_reward({c, calls, rej}, gated ? RewardVariant::Cohort : RewardVariant::Normal);
          v.require(std::abs(r.total - want) <= 1e-12, "mismatch at " + std::to_string(c) + "," +
                                                           std::to_string(calls) + "," + std::to_string(rej));
        }
      }
  v.require(combos == 147, "combination count");
  v.require(std::abs(accuracy_reward(6, RewardVariant::Cohort) - 1.2) <= 1e-12, "6 correct");
  v.require(accuracy_reward(3, RewardVariant::Cohort) == 0.0 && accuracy_reward(4, RewardVariant::Cohort) > 0, "gate");
  v.require(retrieval_reward(0) == -0.6 && retrieval_reward(1) == 0.0 && retrieval_reward(5) == 0.6, "retrieval steps");
  v.require(std::abs(rejection_penalty(6) + 0.6) <= 1e-12, "rejection 6");
  v.require(seconds_since(t0) < 1.0, "runtime");
  v.note = v.ok ? "147 combinations x 2 variants" : v.note;
  return v;
}

Verdict criterion_table() {
  Verdict v;
  for (int n = 0; n <= 6; ++n) {
    bool s = apply_criterion(n, EvalCriterion::strict());
    bool l = apply_criterion(n, EvalCriterion::lenient());
    v.require(s == (n >= 5), "strict at " + std::to_string(n));
    v.require(l == (n >= 4), "lenient at " + std::to_string(n));
    v.require(!s || l, "monotonicity at " + std::to_string(n));
  }
  if (v.ok) v.note = "7 x 2 cells";
  return v;
}

Verdict fig1_end_to_end() {
  Verdict v;
  auto t0 = Clock::now();
  auto cohort = load_cohorts((kRepoData / "fig1_cohort.jsonl").string()).at(0);
  MockRetriever facts(FactTable::load((kRepoData / "fig1_facts.jsonl").string()));
  auto program = parse_for_template(slurp(kRepoData / "programs" / "generalizer.py"), cohort.tmpl);
  v.require(check_program(program, cohort.tmpl).ok(), "generalizer fails static checks");
  auto good = run_cohort(program, cohort, facts);
  v.require(good.n_correct == 6, "generalizer n_correct " + std::to_string(good.n_correct));
  v.require(apply_criterion(good, EvalCriterion::strict()), "generalizer strict");
  auto shortcut = parse_for_template(slurp(kRepoData / "programs" / "return_one.py"), cohort.tmpl);
  auto bad = run_cohort(shortcut, cohort, facts);
  v.require(bad.summary.n_calls == 0, "shortcut calls");
  v.require(cohort_reward(bad.summary, RewardVariant::Cohort).r_ret == -0.6, "shortcut r_ret");
  v.require(!apply_criterion(bad, EvalCriterion::strict()), "shortcut passes strict");
  v.require(seconds_since(t0) < 1.0, "runtime");
  if (v.ok) v.note = "generalizer 6/6 strict pass; return 1: n_calls 0, r_ret -0.6, strict fail";
  return v;
}

Verdict prompt_protocol() {
  Verdict v;
  std::size_t replies = 0, labels = 0, total = fact_lookup_examples().size();
  for (const auto& ex : fact_lookup_examples()) {
    auto r = parse_llm_reply(ex.reply, ex.kind);
    replies += ex.answered ? r.is_value() : r.is_rejected();
    labels += (classify_complexity(std::string(ex.question)) == Complexity::Simple) == ex.answered;
  }
  v.require(replies == total, "reply parsing " + std::to_string(replies) + "/" + std::to_string(total));
  v.require(labels == total, "complexity " + std::to_string(labels) + "/" + std::to_string(total));
  auto prompt = build_rejection_prompt({"Is water wet?", ValueKind::Bool});
  v.require(prompt.back().content == "Is water wet? (bool)", "final turn");
  if (v.ok)
    v.note = "replies " + std::to_string(replies) + "/" + std::to_string(total) + ", complexity " +
             std::to_string(labels) + "/" + std::to_string(total) + " (the prompt has " + std::to_string(total) +
             " few-shot pairs)";
  return v;
}

Verdict interpreter_oracle() {
  Verdict v;
  MockRetriever retriever(FactTable::load((kData / "exemplar_facts.jsonl").string()));
  auto cases = nlohmann::json::parse(slurp(kData / "exemplar_cases.json"));
  std::set<std::string> programs;
  for (const auto& c : cases) {
    std::string name = c["program"];
    programs.insert(name);
    auto program = dsl::parse_program(slurp(kData / "exemplars" / (name + ".py")));
    auto res = execute(program, bind_parameters(program, c["bindings"].get<std::map<std::string, std::string>>()),
                       retriever);
    std::string where = name + " (" + c["trace"].get<std::string>() + ")";
    v.require(res.dynamic_retrieve_count() == c["calls"].get<std::size_t>(), where + ": calls");
    v.require(res.was_rejected == c["rejected"].get<bool>(), where + ": rejected");
    if (c["status"] == "answered")
      v.require(res.answer() == c["answer"].get<std::int64_t>(), where + ": answer");
    else
      v.require(std::holds_alternative<RuntimeFailure>(res.status), where + ": status");
  }
  v.require(programs.size() >= 8, "fewer than 8 programs");
  if (v.ok) v.note = std::to_string(cases.size()) + " cases over " + std::to_string(programs.size()) + " programs";
  return v;
}

Verdict parser_round_trip() {
  Verdict v;
  for (const auto& entry : std::filesystem::directory_iterator(kData / "exemplars")) {
    auto p = dsl::parse_program(slurp(entry.path()));
    v.require(dsl::parse_program(dsl::format_program(p)) == p, "exemplar " + entry.path().stem().string());
  }
  testkit::ProgramGenerator gen(42);
  for (int i = 0; i < 1000; ++i) {
    auto p = gen.generate();
    try {
      v.require(dsl::parse_program(dsl::format_program(p)) == p, "fuzz round trip");
    } catch (const dsl::ParseError& e) {
      v.require(false, std::string("fuzz program rejected: ") + e.what());
    }
  }
  testkit::ProgramGenerator gen2(7);
  testkit::InvalidMutator mut(8);
  int diagnosed = 0;
  for (int i = 0; i < 10000; ++i) {
    try {
      dsl::parse_program(mut.mutate(dsl::format_program(gen2.generate())));
    } catch (const dsl::ParseError& e) {
      diagnosed += !e.detail().empty();
    }
  }
  v.require(diagnosed == 10000, "diagnosed " + std::to_string(diagnosed) + "/10000");
  if (v.ok) v.note = "exemplars + 1000 generated programs; 10000/10000 invalid inputs diagnosed";
  return v;
}

Verdict advantage_math() {
  Verdict v;
  for (double a : group_advantages(std::vector<double>(5, 0.4)).advantages) v.require(a == 0.0, "zero variance");
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> r(5), s(5);
    double shift = u(rng), scale = 0.2 + std::abs(u(rng));
    for (std::size_t i = 0; i < 5; ++i) {
      r[i] = u(rng);
      s[i] = scale * r[i] + shift;
    }
    auto a = group_advantages(r).advantages, b = group_advantages(s).advantages;
    for (std::size_t i = 0; i < 5; ++i) v.require(std::abs(a[i] - b[i]) <= 1e-6, "shift/scale");
  }
  double worst = 0;
  for (int t = 0; t < 50; ++t) {
    std::vector<double> logits{u(rng), u(rng), u(rng)};
    std::vector<std::size_t> samples;
    std::vector<double> adv;
    for (int i = 0; i < 5; ++i) {
      samples.push_back(rng() % 3);
      adv.push_back(u(rng));
    }
    auto f = [&](const std::vector<double>& l) {
      double z = 0;
      for (double x : l) z += std::exp(x);
      double out = 0;
      for (std::size_t i = 0; i < samples.size(); ++i) out += adv[i] * (l[samples[i]] - std::log(z));
      return out;
    };
    auto g = score_function_gradient(logits, samples, adv);
    const double h = 1e-5;
    for (std::size_t k = 0; k < 3; ++k) {
      auto up = logits, down = logits;
      up[k] += h;
      down[k] -= h;
      worst = std::max(worst, std::abs(g[k] - (f(up) - f(down)) / (2 * h)));
    }
  }
  v.require(worst <= 1e-4, "finite difference gap " + std::to_string(worst));
  if (v.ok) {
    std::ostringstream s;
    s << "max |analytic - finite difference| = " << worst;
    v.note = s.str();
  }
  return v;
}

Verdict shortcut_separation() {
  Verdict v;
  auto t0 = Clock::now();
  auto cohorts = load_cohorts((kRepoData / "shortcut_cohort.jsonl").string());
  auto pool = load_pool((kRepoData / "sim_pool.jsonl").string(), cohorts.at(0).tmpl);
  MockRetriever facts(FactTable::load((kRepoData / "fig1_facts.jsonl").string()));
  std::size_t generalizer = 0;
  while (generalizer < pool.size() && pool[generalizer].shortcut) ++generalizer;
  int wins = 0;
  double min_general = 1;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    ToyTrainConfig cfg;
    cfg.seed = seed;
    auto cmp = compare_variants(pool, cohorts, facts, cfg);
    min_general = std::min(min_general, cmp.get(SimMode::Cohort).final_probabilities.at(generalizer));
    wins += cmp.get(SimMode::Cohort).p_shortcut <= cmp.get(SimMode::Org).p_shortcut;
  }
  double elapsed = seconds_since(t0);
  v.require(min_general > 0.95, "P(generalizer) " + std::to_string(min_general));
  v.require(wins >= 9, "cohort <= org in " + std::to_string(wins) + "/10 seeds");
  v.require(elapsed < 30, "runtime");
  if (v.ok) {
    std::ostringstream s;
    s << "min P(generalizer) " << min_general << " over seeds 1-10; cohort <= org in " << wins << "/10; " << elapsed
      << " s";
    v.note = s.str();
  }
  return v;
}

Verdict wald_statistics() {
  Verdict v;
  std::mt19937_64 rng(23);
  for (int t = 0; t < 200; ++t) {
    std::vector<std::pair<std::string, bool>> outcomes;
    std::size_t n = 1 + rng() % 800, k = 0;
    for (std::size_t i = 0; i < n; ++i) {
      bool pass = rng() % 3 == 0;
      k += pass;
      outcomes.emplace_back("d", pass);
    }
    double p = double(k) / double(n);
    v.require(std::abs(aggregate(outcomes).overall.ci_halfwidth - 1.96 * std::sqrt(p * (1 - p) / double(n))) <= 1e-9,
              "halfwidth");
  }
  double hw = 100 * wald_cell(95, 500).ci_halfwidth;
  v.require(std::abs(hw - 3.1) <= 0.5, "halfwidth at 0.19/500 is " + std::to_string(hw));
  if (v.ok) {
    std::ostringstream s;
    s.precision(3);
    s << "halfwidth at p=0.19, n=500: " << hw << " pp (table: 3.1)";
    v.note = s.str();
  }
  return v;
}

Verdict determinism() {
  Verdict v;
  auto tmp = std::filesystem::temp_directory_path();
  const std::string d = kRepoData.string();
  auto invoke = [&](std::vector<std::string> args) {
    std::ostringstream out, err;
    int code = cli::run_cli(args, out, err);
    return std::make_pair(code, out.str());
  };
  std::string outputs[2][2], files[2][2];
  for (int run = 0; run < 2; ++run) {
    auto eval_path = (tmp / ("ccl_acc_eval" + std::to_string(run) + ".json")).string();
    auto sim_path = (tmp / ("ccl_acc_sim" + std::to_string(run) + ".jsonl")).string();
    auto e = invoke({"eval", "--cohorts", d + "/fig1_cohort.jsonl", "--program", d + "/programs/generalizer.py",
                     "--program", d + "/programs/return_one.py", "--program", d + "/programs/generalizer.py",
                     "--facts", d + "/fig1_facts.jsonl", "--seed", "11", "--no-timestamp", "--out", eval_path});
    auto s = invoke({"sim", "--pool", d + "/sim_pool.jsonl", "--cohorts", d + "/shortcut_cohort.jsonl", "--facts",
                     d + "/fig1_facts.jsonl", "--seed", "11", "--out", sim_path});
    v.require(e.first == 0 && s.first == 0, "nonzero exit");
    outputs[run][0] = e.second;
    outputs[run][1] = s.second;
    files[run][0] = slurp(eval_path);
    files[run][1] = slurp(sim_path);
  }
  v.require(outputs[0][0] == outputs[1][0] && files[0][0] == files[1][0], "eval differs between runs");
  v.require(outputs[0][1] == outputs[1][1] && files[0][1] == files[1][1], "sim differs between runs");
  v.require(!files[0][0].empty() && !files[0][1].empty(), "empty output");
  if (v.ok) v.note = "eval and sim stdout and files byte-identical across two runs";
  return v;
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Verdict()>> criteria[] = {
      {"reward algebra", reward_algebra},         {"criterion truth table", criterion_table},
      {"documentary cohort end to end", fig1_end_to_end}, {"prompt protocol conformance", prompt_protocol},
      {"interpreter vs hand traces", interpreter_oracle}, {"parser round trip", parser_round_trip},
      {"advantage math", advantage_math},         {"cohort vs shortcut separation", shortcut_separation},
      {"Wald statistics", wald_statistics},       {"determinism", determinism},
  };
  int failed = 0;
  int index = 0;
  for (const auto& [name, fn] : criteria) {
    ++index;
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v.ok = false;
      v.note = std::string("exception: ") + e.what();
    }
    failed += !v.ok;
    std::cout << (v.ok ? "PASS" : "FAIL") << " criterion " << index << ": " << name << " - " << v.note << std::endl;
  }
  return failed ? 1 : 0;
}
