#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ccl/data_model.hpp"
#include "ccl/eval.hpp"
#include "ccl/reward.hpp"

namespace ccl {

/// Reward used by the simulator. Org scores only the original member, scaled so a
/// correct original is worth a full cohort's accuracy reward.
enum class SimMode { Cohort, Normal, Org };

inline std::string_view mode_name(SimMode m) {
  switch (m) {
    case SimMode::Cohort: return "cohort";
    case SimMode::Normal: return "normal";
    case SimMode::Org: return "org";
  }
  return "?";
}

inline SimMode parse_mode(std::string_view s) {
  if (s == "cohort") return SimMode::Cohort;
  if (s == "normal") return SimMode::Normal;
  if (s == "org") return SimMode::Org;
  throw std::invalid_argument("unknown sim variant '" + std::string(s) + "'");
}

inline double sim_reward(const CohortOutcome& outcome, SimMode mode) {
  if (mode == SimMode::Cohort) return cohort_reward(outcome.summary, RewardVariant::Cohort).total;
  if (mode == SimMode::Normal) return cohort_reward(outcome.summary, RewardVariant::Normal).total;
  const auto& orig = outcome.members.front();
  const double scale = kCohortMembers;
  return kAccuracyPerCorrect * scale * (orig.correct ? 1 : 0) + retrieval_reward(outcome.summary.n_calls) +
         kRejectionPenaltyPerMember * scale * (orig.rejected ? 1 : 0);
}

// --- policy ----------------------------------------------------------------

inline std::vector<double> softmax(const std::vector<double>& logits) {
  if (logits.empty()) return {};
  double hi = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double z = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) z += p[i] = std::exp(logits[i] - hi);
  for (auto& x : p) x /= z;
  return p;
}

/// Categorical policy over a fixed program pool.
struct ToyPolicy {
  std::vector<double> logits;

  explicit ToyPolicy(std::size_t n) : logits(n, 0.0) {}
  std::vector<double> probabilities() const { return softmax(logits); }
};

/// Uniform in [0, 1) from the top 53 bits; avoids library-specific distributions so
/// runs replay identically across standard libraries.
inline double unit_draw(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline std::size_t sample_index(const std::vector<double>& probs, std::mt19937_64& rng) {
  double u = unit_draw(rng);
  double acc = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  return probs.size() - 1;
}

/// Gradient of sum_i a_i * log softmax(logits)[s_i] with respect to the logits.
inline std::vector<double> score_function_gradient(const std::vector<double>& logits,
                                                   const std::vector<std::size_t>& samples,
                                                   const std::vector<double>& advantages) {
  if (samples.size() != advantages.size()) throw std::invalid_argument("samples/advantages size mismatch");
  auto p = softmax(logits);
  std::vector<double> g(logits.size(), 0.0);
  for (std::size_t i = 0; i < samples.size(); ++i)
    for (std::size_t k = 0; k < logits.size(); ++k) g[k] += advantages[i] * ((k == samples[i] ? 1.0 : 0.0) - p[k]);
  return g;
}

// --- training --------------------------------------------------------------

struct ToyTrainConfig {
  int rollouts_per_update = 5;
  int updates = 200;
  double learning_rate = 0.5;
  SimMode mode = SimMode::Cohort;
  std::uint64_t seed = 0;
  AdvantageNormalization normalization = AdvantageNormalization::MeanStd;
  ExecutionLimits limits;

  void validate() const {
    if (rollouts_per_update < 2) throw std::invalid_argument("rollouts per update must be >= 2");
    if (updates < 0) throw std::invalid_argument("updates must be >= 0");
    if (!std::isfinite(learning_rate)) throw std::invalid_argument("learning rate must be finite");
    limits.validate();
  }
};

struct PoolEntry {
  std::string label;
  bool shortcut = false;
  std::string source;
  dsl::Program program;
};

struct UpdateRecord {
  int update = 0;
  std::string cohort_id;
  std::vector<std::size_t> sampled;
  std::vector<double> rewards;
  std::vector<double> advantages;
  std::vector<double> probabilities;  // after the update
};

struct TrainingLog {
  SimMode mode = SimMode::Cohort;
  std::uint64_t seed = 0;
  std::vector<UpdateRecord> updates;
  std::vector<double> initial_probabilities;
  std::vector<double> final_probabilities;
  bool kl_regularization = false;  // the toy objective has no KL term
};

inline nlohmann::json update_to_json(const UpdateRecord& u) {
  return {{"update", u.update},           {"cohort_id", u.cohort_id},   {"sampled", u.sampled},
          {"rewards", u.rewards},         {"advantages", u.advantages}, {"probabilities", u.probabilities}};
}

/// One JSON object per update followed by a summary row.
inline std::string training_log_jsonl(const TrainingLog& log) {
  std::string out;
  for (const auto& u : log.updates) out += update_to_json(u).dump() + "\n";
  nlohmann::json summary{{"final", true},
                         {"mode", mode_name(log.mode)},
                         {"seed", log.seed},
                         {"updates", log.updates.size()},
                         {"kl_regularization", log.kl_regularization},
                         {"final_probabilities", log.final_probabilities}};
  out += summary.dump() + "\n";
  return out;
}

namespace detail {

inline void check_pool(const std::vector<PoolEntry>& pool, const std::vector<CohortInstance>& cohorts) {
  if (pool.empty()) throw std::invalid_argument("program pool is empty");
  if (cohorts.empty()) throw std::invalid_argument("cohort list is empty");
  for (const auto& c : cohorts) {
    auto header = dsl::parse_header(c.tmpl.function_header);
    for (const auto& e : pool)
      if (e.program.params != header)
        throw dsl::ParseError(dsl::ParseErrorKind::SignatureMismatch,
                              "pool program '" + e.label + "' does not match cohort '" + c.cohort_id + "'", {1, 1});
  }
}

}  // namespace detail

/// REINFORCE with group advantages over a categorical program policy. Cohorts are visited
/// round-robin, one per update. Outcomes are memoized per (program, cohort) when the
/// retriever is deterministic.
inline TrainingLog run_toy_training(const ToyTrainConfig& config, const std::vector<PoolEntry>& pool,
                                    const std::vector<CohortInstance>& cohorts, Retriever& retriever) {
  config.validate();
  detail::check_pool(pool, cohorts);
  ToyPolicy policy(pool.size());
  std::mt19937_64 rng(config.seed);
  std::map<std::pair<std::size_t, std::size_t>, double> memo;
  auto reward_of = [&](std::size_t program, std::size_t cohort) {
    auto key = std::make_pair(program, cohort);
    if (retriever.deterministic())
      if (auto it = memo.find(key); it != memo.end()) return it->second;
    double r = sim_reward(run_cohort(pool[program].program, cohorts[cohort], retriever, config.limits), config.mode);
    if (retriever.deterministic()) memo[key] = r;
    return r;
  };

  TrainingLog log;
  log.mode = config.mode;
  log.seed = config.seed;
  log.initial_probabilities = policy.probabilities();
  for (int u = 0; u < config.updates; ++u) {
    const std::size_t ci = static_cast<std::size_t>(u) % cohorts.size();
    auto probs = policy.probabilities();
    UpdateRecord rec;
    rec.update = u;
    rec.cohort_id = cohorts[ci].cohort_id;
    for (int r = 0; r < config.rollouts_per_update; ++r) rec.sampled.push_back(sample_index(probs, rng));
    for (auto s : rec.sampled) rec.rewards.push_back(reward_of(s, ci));
    rec.advantages = group_advantages(rec.rewards, kDefaultAdvantageEpsilon, config.normalization).advantages;
    auto grad = score_function_gradient(policy.logits, rec.sampled, rec.advantages);
    for (std::size_t k = 0; k < grad.size(); ++k) policy.logits[k] += config.learning_rate * grad[k];
    rec.probabilities = policy.probabilities();
    log.updates.push_back(std::move(rec));
  }
  log.final_probabilities = policy.probabilities();
  return log;
}

inline double shortcut_mass(const std::vector<PoolEntry>& pool, const std::vector<double>& probs) {
  double m = 0;
  for (std::size_t i = 0; i < pool.size(); ++i)
    if (pool[i].shortcut) m += probs[i];
  return m;
}

struct ModeResult {
  SimMode mode;
  std::vector<double> final_probabilities;
  double p_shortcut = 0;
};

struct VariantComparison {
  std::uint64_t seed = 0;
  std::vector<ModeResult> modes;  // Cohort, Normal, Org

  const ModeResult& get(SimMode m) const {
    for (const auto& r : modes)
      if (r.mode == m) return r;
    throw std::out_of_range("mode not in comparison");
  }
};

/// Trains under all three reward modes from the same seed.
inline VariantComparison compare_variants(const std::vector<PoolEntry>& pool,
                                          const std::vector<CohortInstance>& cohorts, Retriever& retriever,
                                          ToyTrainConfig base) {
  VariantComparison out;
  out.seed = base.seed;
  for (SimMode m : {SimMode::Cohort, SimMode::Normal, SimMode::Org}) {
    base.mode = m;
    auto log = run_toy_training(base, pool, cohorts, retriever);
    out.modes.push_back({m, log.final_probabilities, shortcut_mass(pool, log.final_probabilities)});
  }
  return out;
}

inline nlohmann::json comparison_to_json(const VariantComparison& c, const std::vector<PoolEntry>& pool) {
  nlohmann::json labels = nlohmann::json::array();
  for (const auto& e : pool) labels.push_back(e.label);
  nlohmann::json modes = nlohmann::json::object();
  for (const auto& r : c.modes)
    modes[std::string(mode_name(r.mode))] = {{"final_probabilities", r.final_probabilities},
                                             {"p_shortcut", r.p_shortcut}};
  return {{"seed", c.seed}, {"pool", labels}, {"modes", modes}};
}

/// Pool JSONL rows `{"label": str, "shortcut": bool, "program": str}`; every program is
/// parsed against `tmpl`.
inline std::vector<PoolEntry> load_pool(const std::string& path, const AbstractionTemplate& tmpl) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open pool file '" + path + "'");
  std::vector<PoolEntry> pool;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c); })) continue;
    auto where = path + ":" + std::to_string(line) + ": ";
    auto row = nlohmann::json::parse(text, nullptr, false);
    if (row.is_discarded() || !row.is_object()) throw std::runtime_error(where + "malformed JSON");
    if (!row.contains("program") || !row["program"].is_string())
      throw std::runtime_error(where + "missing 'program'");
    PoolEntry e;
    e.label = row.value("label", "program" + std::to_string(pool.size()));
    e.shortcut = row.value("shortcut", false);
    e.source = row["program"].get<std::string>();
    try {
      e.program = parse_for_template(e.source, tmpl);
    } catch (const dsl::ParseError& err) {
      throw std::runtime_error(where + err.what());
    }
    pool.push_back(std::move(e));
  }
  return pool;
}

}  // namespace ccl
