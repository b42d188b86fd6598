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
#include <vector>

#include "doctest.h"
#include "pgrlhf/evaluation.hpp"
#include "pgrlhf/mdp.hpp"
#include "pgrlhf/policy.hpp"
#include "pgrlhf/rollout.hpp"

using namespace pgrlhf;

namespace {

// Two states, two actions. Action 1 in state 0 moves to state 1.
TabularMdp two_state(double gamma = 0.5) {
  std::vector<double> p = {1, 0, 0, 1,   // s0: a0 stays, a1 moves
                           0, 1, 1, 0};  // s1: a0 stays, a1 back
  std::vector<double> r = {0.0, 0.5, 1.0, 0.0};
  return TabularMdp(2, 2, p, r, 0, gamma);
}

}  // namespace

TEST_CASE("bidirectional lock layout") {
  const auto mdp = build_bidirectional_lock(5, 0.9);
  BidirectionalLockLayout lock{5};
  CHECK(mdp.num_states() == 22);
  CHECK(mdp.num_actions() == 5);
  CHECK(mdp.initial_state() == 0);
  CHECK(mdp.reward(lock.good(1, 5), 0) == 1.0);
  CHECK(mdp.reward(lock.good(2, 5), 3) == 0.3);
  CHECK(mdp.reward(lock.bad(1, 2), 1) == doctest::Approx(0.02));
  CHECK(mdp.reward(lock.good(1, 3), 0) == 0.0);
  CHECK(mdp.reward(lock.absorbing(), 0) == 0.0);
  CHECK(mdp.transition_row(0, 0)[lock.good(1, 1)] == 1.0);
  CHECK(mdp.transition_row(0, 2)[lock.bad(2, 1)] == doctest::Approx(1.0 / 3));
  CHECK(mdp.transition_row(lock.good(1, 2), 0)[lock.good(1, 3)] ==
        doctest::Approx(0.95));
  CHECK(mdp.transition_row(lock.good(1, 2), 4)[lock.bad(1, 3)] == 1.0);
  CHECK(mdp.transition_row(lock.good(2, 5), 0)[lock.absorbing()] == 1.0);
  CHECK_THROWS_AS(build_bidirectional_lock(0), std::invalid_argument);
}

TEST_CASE("constructor validation") {
  std::vector<double> p = {1, 0, 0, 1, 0, 1, 1, 0};
  std::vector<double> r = {0, 0, 0, 0};
  CHECK_NOTHROW(TabularMdp(2, 2, p, r, 0, 0.9));
  auto bad_p = p;
  bad_p[0] = 0.9;
  CHECK_THROWS_AS(TabularMdp(2, 2, bad_p, r, 0, 0.9), std::invalid_argument);
  auto bad_r = r;
  bad_r[1] = 1.5;
  CHECK_THROWS_AS(TabularMdp(2, 2, p, bad_r, 0, 0.9), std::invalid_argument);
  CHECK_THROWS_AS(TabularMdp(2, 2, p, r, 0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(TabularMdp(2, 2, p, r, 2, 0.9), std::invalid_argument);
}

TEST_CASE("json round trip") {
  const auto mdp = build_bidirectional_lock(3, 0.8);
  const auto back = TabularMdp::from_json(mdp.to_json());
  CHECK(back.num_states() == mdp.num_states());
  CHECK(back.gamma() == mdp.gamma());
  for (std::size_t i = 0; i < mdp.transitions().size(); ++i)
    REQUIRE(back.transitions()[i] == mdp.transitions()[i]);
  for (std::size_t i = 0; i < mdp.rewards().size(); ++i)
    REQUIRE(back.rewards()[i] == mdp.rewards()[i]);
}

TEST_CASE("geometric rollout length has mean 1/(1-gamma)") {
  const auto mdp = build_bidirectional_lock(5, 0.9);
  const auto pi = Policy::uniform(mdp.num_states(), mdp.num_actions());
  Simulator sim(mdp);
  Rng rng(5, 0);
  for (int i = 0; i < 20000; ++i) sim.rollout(pi, StartSpec::initial(), rng);
  const double mean = static_cast<double>(sim.counters().transitions) /
                      sim.counters().trajectories;
  CHECK(sim.counters().trajectories == 20000u);
  CHECK(std::abs(mean - 10.0) / 10.0 < 0.03);
  CHECK(sim.counters().truncated == 0u);
}

TEST_CASE("fixed start pair is recorded first and truncation is counted") {
  const auto mdp = two_state(0.99);
  const auto pi = Policy::uniform(2, 2);
  Rng rng(6, 0);
  RolloutCounters c;
  const auto tau = sample_discounted_trajectory(mdp, pi, StartSpec::at(1, 1), rng, &c, 3);
  CHECK(tau.steps.front() == StateAction{1, 1});
  CHECK(tau.size() <= 3u);
  int truncated = 0;
  for (int i = 0; i < 200; ++i) {
    RolloutCounters cc;
    sample_discounted_trajectory(mdp, pi, StartSpec::initial(), rng, &cc, 3);
    truncated += static_cast<int>(cc.truncated);
  }
  // P(length >= 3) = 0.99^2.
  CHECK(truncated > 150);
}

TEST_CASE("occupancy sampler matches the exact occupancy") {
  const auto mdp = build_bidirectional_lock(2, 0.8);
  const auto pi = Policy::uniform(mdp.num_states(), mdp.num_actions());
  const auto exact = exact_occupancy(mdp, pi);
  double total = 0.0;
  for (double x : exact) total += x;
  CHECK(total == doctest::Approx(1.0));
  Rng rng(8, 0);
  const int n = 100000;
  std::vector<int> count(exact.size(), 0);
  for (int i = 0; i < n; ++i) {
    const auto sa = sample_from_discounted_occupancy(mdp, pi, rng);
    ++count[mdp.pair_index(sa.state, sa.action)];
  }
  for (std::size_t i = 0; i < exact.size(); ++i) {
    const double p = exact[i];
    const double se = std::sqrt(std::max(p * (1 - p), 1e-12) / n);
    CHECK(std::abs(count[i] / double(n) - p) <= 5 * se + 1e-9);
  }
}

TEST_CASE("lock values against a hand computation") {
  const double g = 0.9;
  const auto mdp = build_bidirectional_lock(5, g);
  // Always the good action.
  std::vector<double> probs(mdp.num_pairs(), 0.0);
  for (int s = 0; s < mdp.num_states(); ++s) probs[mdp.pair_index(s, 0)] = 1.0;
  const Policy good(std::make_shared<ActionTable>(mdp.num_states(), 5, probs),
                    Policy::Kind::kTabular);
  double hand = 0.0;
  for (int h = 1; h <= 5; ++h) {
    const double on_good = std::pow(0.95, h - 1);
    hand += std::pow(g, h) * ((h == 5 ? on_good : 0.0) + 0.02 * (1 - on_good));
  }
  const auto v = exact_policy_value(mdp, good);
  CHECK(v(0) == doctest::Approx(hand).epsilon(1e-12));
  const auto vi = value_iteration(mdp, 1e-12);
  CHECK(vi.values(0) == doctest::Approx(hand).epsilon(1e-9));
  CHECK(vi.greedy_actions[0] == 0);
  const auto greedy = exact_policy_value(mdp, vi.greedy_policy());
  CHECK(std::abs(greedy(0) - vi.values(0)) <= 2e-12 / (1 - g) + 1e-12);
  CHECK_THROWS_AS(value_iteration(mdp, 0.0), std::invalid_argument);
}

TEST_CASE("two-state exact values and Q") {
  const auto mdp = two_state(0.5);
  const auto pi = Policy::uniform(2, 2);
  // V = r_pi + 0.5 P_pi V with r_pi = (0.25, 0.5), P_pi = 0.5 everywhere.
  // Sum: V0 + V1 = 0.75 / (1 - 0.5) = 1.5; difference: V0 - V1 = -0.25.
  const auto v = exact_policy_value(mdp, pi);
  CHECK(v(0) == doctest::Approx(0.625));
  CHECK(v(1) == doctest::Approx(0.875));
  const std::vector<double> r(mdp.rewards().begin(), mdp.rewards().end());
  const auto q = exact_q_values(mdp, pi, r);
  CHECK(q[1] == doctest::Approx(0.5 + 0.5 * 0.875));
  CHECK(normalized_suboptimality(2.0, 1.5) == doctest::Approx(0.25));
}

TEST_CASE("mixture value is the average of component values") {
  const auto mdp = two_state(0.5);
  std::vector<double> a0 = {1, 0, 1, 0};
  std::vector<double> a1 = {0, 1, 0, 1};
  const Policy p0(std::make_shared<ActionTable>(2, 2, a0), Policy::Kind::kTabular);
  const Policy p1(std::make_shared<ActionTable>(2, 2, a1), Policy::Kind::kTabular);
  const auto mix = Policy::mixture({p0, p1});
  const double expect = 0.5 * (exact_policy_value(mdp, p0)(0) +
                               exact_policy_value(mdp, p1)(0));
  CHECK(exact_policy_value(mdp, mix)(0) == doctest::Approx(expect));
}
