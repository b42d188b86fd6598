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

#include <cmath>
#include <memory>
#include <vector>

#include "doctest.h"
#include "pgrlhf/evaluation.hpp"
#include "pgrlhf/features.hpp"
#include "pgrlhf/mdp.hpp"
#include "pgrlhf/optimizer.hpp"
#include "pgrlhf/preference.hpp"
#include "pgrlhf/reward_fn.hpp"
#include "pgrlhf/reward_oracle.hpp"

using namespace pgrlhf;

namespace {

TabularMdp two_state(double gamma) {
  std::vector<double> p = {1, 0, 0, 1, 0, 1, 1, 0};
  std::vector<double> r = {0.0, 0.5, 1.0, 0.0};
  return TabularMdp(2, 2, p, r, 0, gamma);
}

std::vector<double> rewards_of(const TabularMdp& m) {
  return {m.rewards().begin(), m.rewards().end()};
}

OuterConfig small_outer(double gamma) {
  OuterConfig c;
  c.phases = 3;
  c.coverage_samples = 50;
  c.hf_queries = 50;
  c.zeta_hf = 1.0;
  c.w_mu = 2.0;
  c.mle.max_iters = 200;
  c.npg = NpgConfig::with_defaults(gamma, 5, 50, 0.3, 0.95);
  return c;
}

}  // namespace

TEST_CASE("gamma-derived radii and step") {
  CHECK(default_w_theta(0.9) == doctest::Approx(190.0));
  CHECK(default_w_q(0.9) == doctest::Approx(200.0));
  CHECK(default_w_a(0.9) == doctest::Approx(400.0));
  CHECK(default_xi(0.9, 190.0, 100) == doctest::Approx(190.0 / (390.0 * 10.0)));
  const auto c = NpgConfig::with_defaults(0.9, 100, 2500, 0.3, 0.95);
  CHECK(c.xi == doctest::Approx(190.0 / 3900.0));
  const auto s = NpgConfig::with_defaults(0.9, 100, 2500, 0.3, 0.95, XiHorizon::kSgdSteps);
  CHECK(s.xi == doctest::Approx(190.0 / (390.0 * 50.0)));
  CHECK(s.w_theta == doctest::Approx(190.0));
  NpgConfig bad = c;
  bad.gamma = 1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  NpgConfig theory = c;
  theory.theory_mode = true;
  CHECK_FALSE(theory.theory_warning().empty());
  theory.eta = 1e-4;
  CHECK(theory.theory_warning().empty());
}

TEST_CASE("Monte-Carlo Q is unbiased and counts one trajectory") {
  const auto mdp = two_state(0.5);
  const auto pi = Policy::uniform(2, 2);
  const auto q = exact_q_values(mdp, pi, rewards_of(mdp));
  const auto r = RewardFn::table(2, 2, rewards_of(mdp));
  Simulator sim(mdp);
  Rng rng(41, 0);
  const int n = 50000;
  double sum = 0, sq = 0;
  for (int i = 0; i < n; ++i) {
    const double x = monte_carlo_q(sim, pi, 0, 1, r, rng);
    sum += x;
    sq += x * x;
  }
  const double mean = sum / n;
  const double se = std::sqrt((sq / n - mean * mean) / n);
  CHECK(std::abs(mean - q[1]) <= 4 * se);
  CHECK(sim.counters().trajectories == static_cast<std::uint64_t>(n));
}

TEST_CASE("linear Q fit with one-hot features approaches Q") {
  const auto mdp = two_state(0.5);
  const auto fm = one_hot_features(mdp);
  const auto pi = Policy::uniform(2, 2);
  const auto q = exact_q_values(mdp, pi, rewards_of(mdp));
  const auto r = RewardFn::table(2, 2, rewards_of(mdp));
  NpgConfig cfg = NpgConfig::with_defaults(0.5, 1, 20000, 0.3, 0.95);
  cfg.xi = 0.01;
  Simulator sim(mdp);
  Rng rng(42, 0);
  const std::vector<Policy> cover = {pi};
  const auto fit = fit_q_linear(sim, pi, cover, r, fm, cfg, rng);
  CHECK(fit.trajectories == 40000u);
  CHECK(sim.counters().trajectories == 40000u);
  // Every pair has positive occupancy under the uniform cover.
  for (int p = 0; p < 4; ++p) CHECK(std::abs(fit.theta(p) - q[p]) < 0.1);
}

TEST_CASE("theta stays inside the W_theta ball") {
  const auto mdp = two_state(0.5);
  const auto fm = one_hot_features(mdp);
  const auto pi = Policy::uniform(2, 2);
  NpgConfig cfg = NpgConfig::with_defaults(0.5, 1, 500, 0.3, 0.95);
  cfg.w_theta = 0.05;
  cfg.xi = 0.5;
  Simulator sim(mdp);
  Rng rng(43, 0);
  const std::vector<Policy> cover = {pi};
  const auto fit = fit_q_linear(sim, pi, cover, RewardFn::table(2, 2, rewards_of(mdp)),
                                fm, cfg, rng);
  CHECK(fit.theta.norm() <= 0.05 + 1e-12);
}

TEST_CASE("npg_update: T = 1 returns pi^0, beta extremes") {
  const auto mdp = two_state(0.5);
  const auto fm = std::make_shared<const FeatureMap>(one_hot_features(mdp));
  const auto r = RewardFn::table(2, 2, rewards_of(mdp));
  const std::vector<Policy> cover = {Policy::uniform(2, 2)};
  CovarianceAccumulator cov(4, 1.0);
  cov.accumulate(fm->feature(0, 0), 1.0);
  Simulator sim(mdp);
  Rng rng(44, 0);

  auto cfg = NpgConfig::with_defaults(0.5, 1, 30, 0.3, 10.0);
  auto res = npg_update(sim, cover, cov.snapshot(), r, fm, cfg, rng);
  CHECK(res.mixture.leaf_count() == 1u);
  CHECK(res.trajectories == 60u);
  // beta above every quadratic form: no bonus, pi^0 uniform.
  CHECK(res.mixture.action_distribution(0)[0] == doctest::Approx(0.5));
  CHECK(res.partition->in_known_set(0));

  // qf(0,0) = 1/2, others 1: beta = 0.75 bonuses (0,1), (1,0), (1,1).
  cfg = NpgConfig::with_defaults(0.5, 4, 30, 0.3, 0.75);
  res = npg_update(sim, cover, cov.snapshot(), r, fm, cfg, rng);
  CHECK(res.mixture.leaf_count() == 4u);
  CHECK(res.trajectories == 4u * 60u);
  // Off K: uniform over the bonused action only, for every iterate.
  CHECK(res.mixture.action_distribution(0)[1] == doctest::Approx(1.0));
  CHECK(res.mixture.action_distribution(1)[0] == doctest::Approx(0.5));
}

TEST_CASE("pg_rlhf accounting, isolation and counters") {
  const auto mdp = build_bidirectional_lock(3, 0.9);
  const auto fm = std::make_shared<const FeatureMap>(one_hot_features(mdp));
  auto handle = std::make_shared<RewardOracleHandle>(mdp.num_states(), mdp.num_actions(),
                                                     rewards_of(mdp));
  handle->set_poisoned(true);
  PreferenceOracle oracle(handle);
  const auto cfg = small_outer(0.9);
  Rng rng(45, 0);
  int callbacks = 0;
  const auto res = run_pg_rlhf(mdp, fm, oracle, default_baseline_policy(mdp), cfg, rng,
                               [&](const PhaseView& v) {
                                 ++callbacks;
                                 CHECK(v.hf_differences != nullptr);
                                 CHECK(v.hf_differences->size() == 50u);
                                 CHECK(v.cover.size() == static_cast<std::size_t>(v.record.phase + 1));
                               });
  CHECK(callbacks == 3);
  // (K + 2 M_HF + 2 T M_SGD) per phase.
  CHECK(res.counters.trajectories == 3u * (50 + 100 + 2 * 5 * 50));
  CHECK(res.tally.total() == res.counters.trajectories);
  CHECK(res.queries == 150u);
  CHECK(handle->direct_reads() == 0u);
  CHECK(res.output.leaf_count() == 3u * 5u);
  for (const auto& ph : res.phases) {
    CHECK(ph.mu_norm <= cfg.w_mu + 1e-9);
    CHECK(ph.max_theta_norm <= cfg.npg.w_theta + 1e-9);
  }
}

TEST_CASE("pc_pg accounting and true-reward reads") {
  const auto mdp = build_bidirectional_lock(3, 0.9);
  const auto fm = std::make_shared<const FeatureMap>(one_hot_features(mdp));
  auto handle = std::make_shared<RewardOracleHandle>(mdp.num_states(), mdp.num_actions(),
                                                     rewards_of(mdp));
  const auto cfg = small_outer(0.9);
  Rng rng(46, 0);
  const auto res = run_pc_pg(mdp, fm, RewardFn::observed(handle), cfg, rng);
  CHECK(res.counters.trajectories == 3u * (50 + 2 * 5 * 50));
  CHECK(res.queries == 0u);
  CHECK(handle->direct_reads() > 0u);
}

TEST_CASE("driver input validation") {
  const auto mdp = build_bidirectional_lock(2, 0.9);
  const auto fm = std::make_shared<const FeatureMap>(one_hot_features(mdp));
  const auto r = RewardFn::table(mdp.num_states(), mdp.num_actions(), rewards_of(mdp));
  Rng rng(1, 0);
  auto cfg = small_outer(0.8);  // gamma disagrees with the MDP
  CHECK_THROWS_AS(run_pc_pg(mdp, fm, r, cfg, rng), std::invalid_argument);
  cfg = small_outer(0.9);
  cfg.coverage_samples = 0;
  CHECK_THROWS_AS(run_pc_pg(mdp, fm, r, cfg, rng), std::invalid_argument);
  cfg = small_outer(0.9);
  const auto other = std::make_shared<const FeatureMap>(
      one_hot_features(build_bidirectional_lock(3, 0.9)));
  CHECK_THROWS_AS(run_pc_pg(mdp, other, r, cfg, rng), std::invalid_argument);
}
