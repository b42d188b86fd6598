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

#ifndef PGRLHF_REWARD_FN_HPP_
#define PGRLHF_REWARD_FN_HPP_

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "pgrlhf/features.hpp"
#include "pgrlhf/policy.hpp"
#include "pgrlhf/reward_oracle.hpp"

namespace pgrlhf {

// Rule (s, a) -> real used for rollouts, Q targets and exact evaluation.
class RewardFn {
 public:
  enum class Kind { kTable, kLinear, kBonusAugmented, kObserved, kNeural };

  // r(s, a) = table[s * A + a].
  static RewardFn table(int num_states, int num_actions,
                        std::vector<double> values);
  // r(s, a) = phi(s, a)^T mu.
  static RewardFn linear(std::shared_ptr<const FeatureMap> features,
                         Eigen::VectorXd mu);
  // r(s, a) = base(s, a) + b(s, a).
  static RewardFn with_bonus(RewardFn base,
                             std::shared_ptr<const BonusPartition> bonus);
  // Reads the hidden true reward through the counted handle.
  static RewardFn observed(std::shared_ptr<const RewardOracleHandle> handle);
  // Arbitrary rule, e.g. a reward network h(s, a; mu).
  static RewardFn neural(int num_states, int num_actions,
                         std::function<double(int, int)> rule);

  Kind kind() const { return kind_; }
  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }

  double operator()(int s, int a) const { return rule_(s, a); }

  // The bonus part alone (0 when there is no bonus).
  double bonus(int s, int a) const {
    return bonus_ ? bonus_->bonus(s, a) : 0.0;
  }
  const std::shared_ptr<const BonusPartition>& bonus_partition() const {
    return bonus_;
  }

  // Evaluates every pair. Observed rewards are read (and counted) once per
  // pair, so this is for evaluation code only.
  std::vector<double> materialize() const;

 private:
  RewardFn(Kind kind, int num_states, int num_actions,
           std::function<double(int, int)> rule)
      : kind_(kind),
        num_states_(num_states),
        num_actions_(num_actions),
        rule_(std::move(rule)) {}

  Kind kind_;
  int num_states_;
  int num_actions_;
  std::function<double(int, int)> rule_;
  std::shared_ptr<const BonusPartition> bonus_;
};

}  // namespace pgrlhf

#endif  // PGRLHF_REWARD_FN_HPP_
