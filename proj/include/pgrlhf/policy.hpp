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

#ifndef PGRLHF_POLICY_HPP_
#define PGRLHF_POLICY_HPP_

#include <Eigen/Dense>
#include <atomic>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "pgrlhf/features.hpp"
#include "pgrlhf/rng.hpp"

namespace pgrlhf {

// pi(a | s) for every state of a finite MDP, with per-state CDFs for
// sampling. Every stationary policy over a tabular MDP reduces to one.
class ActionTable {
 public:
  static constexpr double kNormTolerance = 1e-12;

  // Rows of `probabilities` must be nonnegative and sum to one within
  // kNormTolerance (they are renormalized exactly afterwards).
  ActionTable(int num_states, int num_actions,
              std::vector<double> probabilities);

  static ActionTable uniform(int num_states, int num_actions);

  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }

  std::span<const double> distribution(int s) const {
    return {probs_.data() + static_cast<std::size_t>(s) * num_actions_,
            static_cast<std::size_t>(num_actions_)};
  }
  double probability(int s, int a) const {
    return probs_[static_cast<std::size_t>(s) * num_actions_ + a];
  }
  int sample(int s, Rng& rng) const {
    return static_cast<int>(rng.from_cdf(
        {cdf_.data() + static_cast<std::size_t>(s) * num_actions_,
         static_cast<std::size_t>(num_actions_)}));
  }

 private:
  int num_states_;
  int num_actions_;
  std::vector<double> probs_;
  std::vector<double> cdf_;
};

// Softmax of scores row by row with max-subtraction.
std::vector<double> softmax_rows(std::span<const double> scores,
                                 int num_states, int num_actions);

// Immutable policy handle used by rollouts and exact evaluation. Either a
// single stationary policy (an ActionTable) or a uniform mixture of
// policies whose component is drawn once per episode.
class Policy {
 public:
  enum class Kind { kTabular, kLogLinear, kPartitioned, kNeural, kMixture };

  Policy(std::shared_ptr<const ActionTable> table, Kind kind);

  // Throws std::invalid_argument on an empty component list.
  static Policy mixture(std::vector<Policy> components);
  static Policy uniform(int num_states, int num_actions);

  Kind kind() const { return kind_; }
  std::string kind_name() const;
  bool is_mixture() const { return kind_ == Kind::kMixture; }
  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }

  // Leaf policies only.
  const ActionTable& table() const;
  const std::shared_ptr<const ActionTable>& table_ptr() const {
    return table_;
  }
  // Mixtures only.
  std::span<const Policy> components() const;

  // Per-state action probabilities; for a mixture, the average of the
  // component distributions.
  std::vector<double> action_distribution(int s) const;

  // Resolves the mixture for one episode: descends uniformly at random to a
  // leaf. Leaves return themselves without consuming randomness.
  const ActionTable& draw_episode_table(Rng& rng) const;

  // Number of leaf policies reachable (with multiplicity).
  std::size_t leaf_count() const;

 private:
  Kind kind_;
  int num_states_ = 0;
  int num_actions_ = 0;
  std::shared_ptr<const ActionTable> table_;
  std::shared_ptr<const std::vector<Policy>> components_;
};

// pi_w(a | s) proportional to exp(phi(s, a)^T w).
class LogLinearPolicy {
 public:
  LogLinearPolicy(std::shared_ptr<const FeatureMap> features,
                  Eigen::VectorXd w);

  // w = 0.
  static LogLinearPolicy zero(std::shared_ptr<const FeatureMap> features);

  const FeatureMap& features() const { return *features_; }
  const std::shared_ptr<const FeatureMap>& features_ptr() const {
    return features_;
  }
  const Eigen::VectorXd& parameters() const { return w_; }

  std::span<const double> action_distribution(int s) const {
    return table_->distribution(s);
  }
  const std::shared_ptr<const ActionTable>& table_ptr() const {
    return table_;
  }

  Policy as_policy() const { return Policy(table_, Policy::Kind::kLogLinear); }
  operator Policy() const { return as_policy(); }

  nlohmann::json to_json() const;
  static LogLinearPolicy from_json(const nlohmann::json& j,
                                   std::shared_ptr<const FeatureMap> features);

 private:
  std::shared_ptr<const FeatureMap> features_;
  Eigen::VectorXd w_;
  std::shared_ptr<const ActionTable> table_;
};

// Returns the log-linear policy with parameter w + eta * theta. Throws
// std::invalid_argument on a dimension mismatch.
LogLinearPolicy npg_step(const LogLinearPolicy& policy,
                         const Eigen::VectorXd& theta, double eta);

// Exploration bonus b(s, a) = 1/(1-gamma) if q(s, a) >= beta else 0, where
// q is an inverse-covariance quadratic form of the pair's feature. Values
// are computed on first use per pair and memoized; the set of known
// states K = {s : b(s, .) == 0} is derived from the same memo.
class BonusPartition {
 public:
  using QuadraticForm = std::function<double(int s, int a)>;

  BonusPartition(int num_states, int num_actions, QuadraticForm form,
                 double beta, double gamma, std::uint64_t digest = 0);

  // Bonus backed by phi(s,a)^T (M + zeta I)^{-1} phi(s,a).
  static std::shared_ptr<const BonusPartition> linear(
      std::shared_ptr<const FeatureMap> features, CovarianceSnapshot snapshot,
      double beta, double gamma);

  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }
  double beta() const { return beta_; }
  double gamma() const { return gamma_; }
  double bonus_value() const { return 1.0 / (1.0 - gamma_); }
  std::uint64_t digest() const { return digest_; }

  bool is_bonused(int s, int a) const;
  double bonus(int s, int a) const {
    return is_bonused(s, a) ? bonus_value() : 0.0;
  }
  bool in_known_set(int s) const;
  std::vector<int> bonused_actions(int s) const;
  // The underlying quadratic form (not memoized).
  double quadratic_form(int s, int a) const { return form_(s, a); }

 private:
  int num_states_;
  int num_actions_;
  QuadraticForm form_;
  double beta_;
  double gamma_;
  std::uint64_t digest_;
  // -1 unknown, 0 no bonus, 1 bonus.
  mutable std::unique_ptr<std::atomic<signed char>[]> memo_;
};

// Follows `inner` on known states and is uniform over the bonused actions
// elsewhere.
class PartitionedPolicy {
 public:
  PartitionedPolicy(std::shared_ptr<const BonusPartition> partition,
                    std::shared_ptr<const ActionTable> inner,
                    Policy::Kind inner_kind = Policy::Kind::kLogLinear);

  const BonusPartition& partition() const { return *partition_; }
  const std::shared_ptr<const BonusPartition>& partition_ptr() const {
    return partition_;
  }
  std::span<const double> action_distribution(int s) const {
    return table_->distribution(s);
  }
  Policy as_policy() const {
    return Policy(table_, Policy::Kind::kPartitioned);
  }
  operator Policy() const { return as_policy(); }

 private:
  std::shared_ptr<const BonusPartition> partition_;
  std::shared_ptr<const ActionTable> inner_;
  std::shared_ptr<const ActionTable> table_;
};

// Freezes the bonus from a covariance snapshot with threshold beta
// (beta > 0, else std::invalid_argument).
PartitionedPolicy freeze_partition(const LogLinearPolicy& inner,
                                   const CovarianceSnapshot& snapshot,
                                   double beta, double gamma);

// Serialized parameters plus the covariance snapshot digest.
nlohmann::json partitioned_to_json(const LogLinearPolicy& inner,
                                   const BonusPartition& partition);

}  // namespace pgrlhf

#endif  // PGRLHF_POLICY_HPP_
