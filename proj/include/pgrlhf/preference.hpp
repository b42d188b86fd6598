// Copyright 2026 The pgrlhf Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PGRLHF_PREFERENCE_HPP_
#define PGRLHF_PREFERENCE_HPP_

#include <atomic>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "pgrlhf/features.hpp"
#include "pgrlhf/mdp.hpp"
#include "pgrlhf/policy.hpp"
#include "pgrlhf/reward_oracle.hpp"
#include "pgrlhf/rng.hpp"
#include "pgrlhf/rollout.hpp"

namespace pgrlhf {

// 1 / (1 + exp(-x)), stable for large |x|.
double bt_preference_probability(double reward_difference);

struct PreferenceRecord {
  Trajectory tau1;
  Trajectory tau2;
  int y = 0;  // 1 when tau1 is preferred
};

// Simulated labeler. Holds the hidden true reward and counts every query.
class PreferenceOracle {
 public:
  explicit PreferenceOracle(std::shared_ptr<const RewardOracleHandle> truth);

  // y ~ Bernoulli(sigmoid(R(tau1) - R(tau2))) under the true reward.
  PreferenceRecord compare(Trajectory tau1, Trajectory tau2, Rng& rng);

  std::uint64_t queries() const { return queries_.load(); }
  const RewardOracleHandle& truth() const { return *truth_; }

 private:
  std::shared_ptr<const RewardOracleHandle> truth_;
  std::atomic<std::uint64_t> queries_{0};
};

inline PreferenceRecord sample_comparison(PreferenceOracle& oracle,
                                          Trajectory tau1, Trajectory tau2,
                                          Rng& rng) {
  return oracle.compare(std::move(tau1), std::move(tau2), rng);
}

// Trajectory law for the first slot of phase n's comparisons. For n >= 1 it
// is the uniform mixture over i = 1..n of "start from rho^{i-1}_cov, then
// follow pi^i"; for n = 0 it is pi^0 from the initial state. `history` holds
// pi^0..pi^n.
class HfPhasePlan {
 public:
  HfPhasePlan(int phase, std::vector<Policy> history, Policy baseline,
              int budget);

  int phase() const { return phase_; }
  int budget() const { return budget_; }
  std::size_t component_count() const {
    return static_cast<std::size_t>(phase_ == 0 ? 1 : phase_);
  }
  const Policy& baseline() const { return baseline_; }
  std::span<const Policy> history() const { return history_; }

  // Draws tau^(1); a component index is chosen uniformly.
  Trajectory draw_first(Simulator& sim, Rng& rng) const;
  Trajectory draw_second(Simulator& sim, Rng& rng) const;

 private:
  int phase_;
  std::vector<Policy> history_;
  Policy baseline_;
  int budget_;
};

// M_HF labelled pairs for one phase, tau^(2) from the baseline at s_init.
std::vector<PreferenceRecord> collect_phase_feedback(const HfPhasePlan& plan,
                                                     Simulator& sim,
                                                     PreferenceOracle& oracle,
                                                     Rng& rng);

// Uniform over actions at every state.
Policy default_baseline_policy(const TabularMdp& mdp);

struct BaselineCoverage {
  // Largest c with D >= c B on the support of B, where D is the second
  // moment of chi(tau1) - chi(tau2) and B that of chi(tau2).
  double ratio = 0.0;
  double min_eig_difference = 0.0;
  double max_eig_baseline = 0.0;
  int support_rank = 0;
};

// Monte-Carlo estimate with tau1 ~ O^policy from a uniformly drawn (s, a)
// and tau2 ~ O^baseline from s_init.
BaselineCoverage baseline_coverage_diagnostic(const TabularMdp& mdp,
                                              const FeatureMap& features,
                                              const Policy& policy,
                                              const Policy& baseline,
                                              int num_pairs, Rng& rng);

// JSON lines: {"tau1": [pair indices], "tau2": [...], "y": 0|1}, pair
// index s * A + a.
void write_preferences_jsonl(std::ostream& out,
                             std::span<const PreferenceRecord> records,
                             int num_actions);
std::vector<PreferenceRecord> read_preferences_jsonl(std::istream& in,
                                                     int num_actions);

}  // namespace pgrlhf

#endif  // PGRLHF_PREFERENCE_HPP_
