#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace ccl {

/// Accuracy reward mode. Cohort pays accuracy only when the program solves at least
/// kCohortGate of the six members; Normal pays per correct member.
enum class RewardVariant { Cohort, Normal };

inline constexpr int kCohortMembers = 6;
inline constexpr int kCohortGate = 4;
inline constexpr double kAccuracyPerCorrect = 0.2;
inline constexpr double kRetrievePenaltyNone = -0.6;
inline constexpr double kRetrieveBonusMany = 0.6;
inline constexpr double kRejectionPenaltyPerMember = -0.1;

inline std::string_view variant_name(RewardVariant v) { return v == RewardVariant::Cohort ? "cohort" : "normal"; }

inline RewardVariant parse_variant(std::string_view s) {
  if (s == "cohort") return RewardVariant::Cohort;
  if (s == "normal") return RewardVariant::Normal;
  throw std::invalid_argument("unknown reward variant '" + std::string(s) + "'");
}

struct CohortExecutionSummary {
  int n_correct = 0;
  int n_calls = 0;
  int n_rejected = 0;

  void validate() const {
    if (n_correct < 0 || n_correct > kCohortMembers)
      throw std::out_of_range("n_correct must be in [0, 6], got " + std::to_string(n_correct));
    if (n_calls < 0) throw std::out_of_range("n_calls must be >= 0");
    if (n_rejected < 0 || n_rejected > kCohortMembers)
      throw std::out_of_range("n_rejected must be in [0, 6], got " + std::to_string(n_rejected));
  }
};

struct RewardBreakdown {
  double r_acc = 0;
  double r_ret = 0;
  double r_rej = 0;
  double total = 0;
  RewardVariant variant = RewardVariant::Cohort;
};

inline double accuracy_reward(int n_correct, RewardVariant variant) {
  if (n_correct < 0 || n_correct > kCohortMembers)
    throw std::out_of_range("n_correct must be in [0, 6], got " + std::to_string(n_correct));
  if (variant == RewardVariant::Cohort && n_correct < kCohortGate) return 0.0;
  return kAccuracyPerCorrect * n_correct;
}

inline double retrieval_reward(int n_calls) {
  if (n_calls < 0) throw std::out_of_range("n_calls must be >= 0");
  if (n_calls == 0) return kRetrievePenaltyNone;
  if (n_calls == 1) return 0.0;
  return kRetrieveBonusMany;
}

inline double rejection_penalty(int n_rejected) {
  if (n_rejected < 0 || n_rejected > kCohortMembers)
    throw std::out_of_range("n_rejected must be in [0, 6], got " + std::to_string(n_rejected));
  return n_rejected == 0 ? 0.0 : kRejectionPenaltyPerMember * n_rejected;
}

inline RewardBreakdown cohort_reward(const CohortExecutionSummary& s, RewardVariant variant) {
  s.validate();
  RewardBreakdown r;
  r.variant = variant;
  r.r_acc = accuracy_reward(s.n_correct, variant);
  r.r_ret = retrieval_reward(s.n_calls);
  r.r_rej = rejection_penalty(s.n_rejected);
  r.total = r.r_acc + r.r_ret + r.r_rej;
  return r;
}

/// Reward export row consumed by an external trainer.
inline nlohmann::json reward_record(const std::string& cohort_id, int sample_index,
                                    const CohortExecutionSummary& s, const RewardBreakdown& r) {
  return {{"cohort_id", cohort_id},  {"sample_index", sample_index}, {"n_correct", s.n_correct},
          {"n_calls", s.n_calls},    {"n_rejected", s.n_rejected},   {"variant", variant_name(r.variant)},
          {"r_acc", r.r_acc},        {"r_ret", r.r_ret},             {"r_rej", r.r_rej},
          {"total", r.total}};
}

// --- group advantages ------------------------------------------------------

enum class AdvantageNormalization { MeanStd, MeanOnly };

struct GroupAdvantages {
  std::vector<double> rewards;
  std::vector<double> advantages;
  double epsilon = 1e-8;
  double mean = 0;
  double stddev = 0;  // population standard deviation
};

inline constexpr double kDefaultAdvantageEpsilon = 1e-8;

/// a_i = (r_i - mean) / (std + eps) with the population std; all-equal groups give zeros.
inline GroupAdvantages group_advantages(std::span<const double> rewards,
                                        double epsilon = kDefaultAdvantageEpsilon,
                                        AdvantageNormalization norm = AdvantageNormalization::MeanStd) {
  if (rewards.empty()) throw std::invalid_argument("group_advantages: empty reward group");
  if (epsilon < 0) throw std::invalid_argument("group_advantages: epsilon must be >= 0");
  GroupAdvantages out;
  out.rewards.assign(rewards.begin(), rewards.end());
  out.epsilon = epsilon;
  const double n = static_cast<double>(rewards.size());
  out.mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
  double ss = 0;
  for (double r : rewards) ss += (r - out.mean) * (r - out.mean);
  out.stddev = std::sqrt(ss / n);

  bool all_equal = std::all_of(rewards.begin(), rewards.end(), [&](double r) { return r == rewards[0]; });
  out.advantages.assign(rewards.size(), 0.0);
  if (all_equal) return out;
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    double centered = rewards[i] - out.mean;
    out.advantages[i] = norm == AdvantageNormalization::MeanStd ? centered / (out.stddev + epsilon) : centered;
  }
  return out;
}

}  // namespace ccl
