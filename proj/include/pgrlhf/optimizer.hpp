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

#ifndef PGRLHF_OPTIMIZER_HPP_
#define PGRLHF_OPTIMIZER_HPP_

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "pgrlhf/features.hpp"
#include "pgrlhf/mdp.hpp"
#include "pgrlhf/policy.hpp"
#include "pgrlhf/preference.hpp"
#include "pgrlhf/reward_fn.hpp"
#include "pgrlhf/reward_mle.hpp"
#include "pgrlhf/rollout.hpp"

namespace pgrlhf {

// Radii and constants that depend only on gamma.
double default_w_theta(double gamma);  // 2/(1-g)^2 - 1/(1-g)
double default_w_q(double gamma);      // 2/(1-g)^2
double default_w_a(double gamma);      // 4/(1-g)^2
// W_theta / ((W_Q + W_theta) sqrt(horizon)).
double default_xi(double gamma, double w_theta, int horizon);

// Which horizon sets the default SGD step: sqrt(T) or sqrt(M_SGD).
enum class XiHorizon { kIterations, kSgdSteps };

struct NpgConfig {
  int iterations = 100;    // T
  double eta = 0.3;
  double xi = 0.0;         // SGD step
  int sgd_steps = 2500;    // M_SGD
  double w_theta = 0.0;    // projection radius for theta
  double beta = 0.95;      // bonus threshold
  double gamma = 0.9;
  bool theory_mode = false;

  // gamma-derived defaults for xi and W_theta.
  static NpgConfig with_defaults(double gamma, int iterations, int sgd_steps,
                                 double eta, double beta,
                                 XiHorizon horizon = XiHorizon::kIterations);

  // Throws std::invalid_argument on nonpositive fields or gamma outside
  // [0, 1).
  void validate() const;
  // Non-empty when theory mode is on and eta > 1/W_A.
  std::string theory_warning() const;
};

// One rollout from (s, a) under `policy`; the plain sum of `reward` along
// it. Counts one trajectory in `sim`.
double monte_carlo_q(Simulator& sim, const Policy& policy, int s, int a,
                     const RewardFn& reward, Rng& rng);

struct QFit {
  Eigen::VectorXd theta;  // iterate average
  int steps = 0;
  std::uint64_t trajectories = 0;  // tallied by this call
};

// Projected SGD on E[(phi^T theta - (Q_hat - b))^2] over the ball of radius
// W_theta, with (s, a) drawn from the cover and Q_hat from monte_carlo_q.
// theta starts at 0; returns the average of the M_SGD post-step iterates.
QFit fit_q_linear(Simulator& sim, const Policy& policy,
                  std::span<const Policy> cover, const RewardFn& reward,
                  const FeatureMap& features, const NpgConfig& cfg, Rng& rng);

struct NpgResult {
  Policy mixture;  // Unif(pi^0, ..., pi^{T-1})
  std::shared_ptr<const BonusPartition> partition;
  LogLinearPolicy last_inner;  // w^T
  std::uint64_t trajectories = 0;
  double max_theta_norm = 0.0;
};

// NPG-Update: bonus and known set from `coverage`, pi^0 uniform on K and
// uniform over bonused actions off K, then T rounds of fit_q_linear +
// npg_step with off-K rows pinned to pi^0. `base_reward` is r_hat (or the
// true reward); the bonus is added here.
NpgResult npg_update(Simulator& sim, std::span<const Policy> cover,
                     const CovarianceSnapshot& coverage,
                     const RewardFn& base_reward,
                     std::shared_ptr<const FeatureMap> features,
                     const NpgConfig& cfg, Rng& rng);

struct OuterConfig {
  int phases = 30;              // N
  int coverage_samples = 2500;  // K
  int hf_queries = 2500;        // M_HF
  double zeta_cov = 1.0;
  double zeta_hf = 1.0;
  double w_mu = 1.0;
  MleOptions mle;
  NpgConfig npg;
  std::size_t max_rollout_steps = kDefaultMaxSteps;

  void validate() const;
};

struct OpTally {
  std::uint64_t coverage = 0;
  std::uint64_t feedback = 0;
  std::uint64_t sgd = 0;
  std::uint64_t total() const { return coverage + feedback + sgd; }
};

struct LearnerPhase {
  int phase = 0;
  RolloutCounters counters;  // cumulative, measured by the simulator
  OpTally tally;             // cumulative, tallied per operation
  std::uint64_t queries = 0;
  int known_states = 0;
  int bonused_pairs = 0;
  double max_theta_norm = 0.0;
  double w_norm = 0.0;
  // pg_rlhf only.
  MleSolution mle;
  double mu_norm = 0.0;
};

// What the driver hands the harness after phase n.
struct PhaseView {
  const LearnerPhase& record;
  const Policy& next_policy;               // pi^{n+1}
  std::span<const Policy> cover;           // pi^0..pi^n (rho^n_cov)
  const BonusPartition& partition;
  const std::vector<Eigen::VectorXd>* hf_differences;  // null for pc_pg
  const Eigen::VectorXd* mu_hat;                       // null for pc_pg
};
using PhaseCallback = std::function<void(const PhaseView&)>;

struct LearnerResult {
  Policy output;  // Unif(pi^1..pi^N)
  std::vector<LearnerPhase> phases;
  RolloutCounters counters;
  OpTally tally;
  std::uint64_t queries = 0;
};

// PG-RLHF. The learner sees dynamics with the reward removed; reward
// information reaches it only through `oracle`.
LearnerResult run_pg_rlhf(const TabularMdp& dynamics,
                          std::shared_ptr<const FeatureMap> features,
                          PreferenceOracle& oracle, const Policy& baseline,
                          const OuterConfig& cfg, Rng& rng,
                          const PhaseCallback& on_phase = {});

// PC-PG with the true reward read through `reward` (counted by its handle).
LearnerResult run_pc_pg(const TabularMdp& dynamics,
                        std::shared_ptr<const FeatureMap> features,
                        const RewardFn& reward, const OuterConfig& cfg,
                        Rng& rng, const PhaseCallback& on_phase = {});

}  // namespace pgrlhf

#endif  // PGRLHF_OPTIMIZER_HPP_
