#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "ccl/sim.hpp"

using namespace ccl;

namespace {

const std::filesystem::path kRepoData = CCL_REPO_DATA;

struct SimFixture {
  std::vector<CohortInstance> cohorts = load_cohorts((kRepoData / "shortcut_cohort.jsonl").string());
  std::vector<PoolEntry> pool = load_pool((kRepoData / "sim_pool.jsonl").string(), cohorts.at(0).tmpl);
  MockRetriever facts{FactTable::load((kRepoData / "fig1_facts.jsonl").string())};
};

double objective(const std::vector<double>& logits, const std::vector<std::size_t>& samples,
                 const std::vector<double>& adv) {
  // Log-sum-exp written out separately from softmax().
  double hi = logits[0];
  for (double l : logits) hi = std::max(hi, l);
  double z = 0;
  for (double l : logits) z += std::exp(l - hi);
  double lse = hi + std::log(z);
  double f = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) f += adv[i] * (logits[samples[i]] - lse);
  return f;
}

}  // namespace

TEST(Policy, SoftmaxIsNormalizedAndStable) {
  auto p = softmax({1000.0, 1000.0, -1000.0});
  EXPECT_NEAR(p[0], 0.5, 1e-12);
  EXPECT_NEAR(p[2], 0.0, 1e-12);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0, 5);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> l(4);
    for (auto& x : l) x = n(rng);
    double s = 0;
    for (double x : softmax(l)) s += x;
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(Policy, SamplingFollowsProbabilities) {
  std::mt19937_64 rng(11);
  std::vector<double> probs{0.1, 0.6, 0.3};
  std::vector<int> hits(3, 0);
  const int draws = 60000;
  for (int i = 0; i < draws; ++i) ++hits[sample_index(probs, rng)];
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(hits[k] / double(draws), probs[k], 0.01);
}

TEST(Policy, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0, 1);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> logits{n(rng), n(rng), n(rng)};
    std::vector<std::size_t> samples;
    std::vector<double> adv;
    for (int i = 0; i < 5; ++i) {
      samples.push_back(rng() % 3);
      adv.push_back(n(rng));
    }
    auto g = score_function_gradient(logits, samples, adv);
    for (double h : {1e-5, 1e-4}) {
      for (std::size_t k = 0; k < 3; ++k) {
        auto up = logits, down = logits;
        up[k] += h;
        down[k] -= h;
        double fd = (objective(up, samples, adv) - objective(down, samples, adv)) / (2 * h);
        EXPECT_NEAR(g[k], fd, 1e-4);
      }
    }
  }
}

TEST(SimReward, ModesOnShortcutCohort) {
  SimFixture f;
  auto g = run_cohort(f.pool[0].program, f.cohorts[0], f.facts);
  auto s = run_cohort(f.pool[2].program, f.cohorts[0], f.facts);
  EXPECT_NEAR(sim_reward(g, SimMode::Cohort), 1.8, 1e-12);
  EXPECT_NEAR(sim_reward(s, SimMode::Cohort), -0.6, 1e-12);
  EXPECT_NEAR(sim_reward(s, SimMode::Normal), 0.2 - 0.6, 1e-12);
  // Org scores only the original question, scaled to the cohort range.
  EXPECT_NEAR(sim_reward(g, SimMode::Org), 1.2 + 0.6, 1e-12);
  EXPECT_NEAR(sim_reward(s, SimMode::Org), 1.2 - 0.6, 1e-12);
}

TEST(Training, ZeroLearningRateKeepsUniform) {
  SimFixture f;
  ToyTrainConfig cfg;
  cfg.learning_rate = 0;
  cfg.updates = 20;
  auto log = run_toy_training(cfg, f.pool, f.cohorts, f.facts);
  for (double p : log.final_probabilities) EXPECT_NEAR(p, 1.0 / 3, 1e-15);
}

TEST(Training, IdenticalPoolHasZeroAdvantages) {
  SimFixture f;
  std::vector<PoolEntry> same(3, f.pool[0]);
  ToyTrainConfig cfg;
  cfg.updates = 30;
  auto log = run_toy_training(cfg, same, f.cohorts, f.facts);
  for (const auto& u : log.updates)
    for (double a : u.advantages) EXPECT_EQ(a, 0.0);
  for (double p : log.final_probabilities) EXPECT_NEAR(p, 1.0 / 3, 1e-12);
}

TEST(Training, ProbabilityMassIsConserved) {
  SimFixture f;
  ToyTrainConfig cfg;
  cfg.seed = 5;
  auto log = run_toy_training(cfg, f.pool, f.cohorts, f.facts);
  for (const auto& u : log.updates) {
    double s = 0;
    for (double p : u.probabilities) s += p;
    EXPECT_NEAR(s, 1.0, 1e-9);
  }
  EXPECT_FALSE(log.kl_regularization);
}

TEST(Training, CohortRewardFindsGeneralizer) {
  SimFixture f;
  ToyTrainConfig cfg;
  cfg.seed = 1;
  auto log = run_toy_training(cfg, f.pool, f.cohorts, f.facts);
  EXPECT_GT(log.final_probabilities[0], 0.95);
}

TEST(Training, CohortBeatsOrgOnShortcutMass) {
  SimFixture f;
  int wins = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    ToyTrainConfig cfg;
    cfg.seed = seed;
    auto cmp = compare_variants(f.pool, f.cohorts, f.facts, cfg);
    wins += cmp.get(SimMode::Cohort).p_shortcut <= cmp.get(SimMode::Org).p_shortcut;
  }
  EXPECT_GE(wins, 9);
}

TEST(Training, SameSeedSameLog) {
  SimFixture f;
  ToyTrainConfig cfg;
  cfg.seed = 42;
  cfg.mode = SimMode::Normal;
  auto a = training_log_jsonl(run_toy_training(cfg, f.pool, f.cohorts, f.facts));
  auto b = training_log_jsonl(run_toy_training(cfg, f.pool, f.cohorts, f.facts));
  EXPECT_EQ(a, b);
  cfg.seed = 43;
  EXPECT_NE(a, training_log_jsonl(run_toy_training(cfg, f.pool, f.cohorts, f.facts)));
}

TEST(Training, ConfigAndPoolValidation) {
  SimFixture f;
  ToyTrainConfig cfg;
  cfg.rollouts_per_update = 1;
  EXPECT_THROW(run_toy_training(cfg, f.pool, f.cohorts, f.facts), std::invalid_argument);
  cfg = {};
  EXPECT_THROW(run_toy_training(cfg, {}, f.cohorts, f.facts), std::invalid_argument);
  auto odd = f.pool;
  odd[1].program = dsl::parse_program("def answer(Film1: str) -> int:\n    return 1\n");
  EXPECT_THROW(run_toy_training(cfg, odd, f.cohorts, f.facts), dsl::ParseError);
  EXPECT_THROW(parse_mode("grpo"), std::invalid_argument);
}
