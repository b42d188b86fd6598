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

#include "pgrlhf/rollout.hpp"

#include <stdexcept>

namespace pgrlhf {
namespace {

void check_pair(const TabularMdp& mdp, StateAction sa) {
  if (!mdp.valid(sa.state, sa.action)) {
    throw std::out_of_range("rollout: start pair out of range");
  }
}

// Continues an episode whose first pair is `first`, following `table`.
void continue_episode(const TabularMdp& mdp, const ActionTable& table,
                      StateAction first, Rng& rng, std::size_t max_steps,
                      Trajectory& out, RolloutCounters* counters) {
  const double gamma = mdp.gamma();
  StateAction cur = first;
  for (;;) {
    out.steps.push_back(cur);
    if (!rng.bernoulli(gamma)) break;
    if (out.steps.size() >= max_steps) {
      if (counters) ++counters->truncated;
      break;
    }
    const int next = mdp.sample_next_state(cur.state, cur.action, rng);
    cur = {next, table.sample(next, rng)};
  }
}

}  // namespace

Trajectory sample_discounted_trajectory(const TabularMdp& mdp,
                                        const Policy& policy,
                                        const StartSpec& start, Rng& rng,
                                        RolloutCounters* counters,
                                        std::size_t max_steps) {
  if (policy.num_states() != mdp.num_states() ||
      policy.num_actions() != mdp.num_actions()) {
    throw std::invalid_argument("rollout: policy/MDP shape mismatch");
  }
  if (max_steps == 0) throw std::invalid_argument("rollout: max_steps == 0");
  const ActionTable& table = policy.draw_episode_table(rng);
  StateAction first;
  switch (start.kind) {
    case StartSpec::Kind::kInitial:
      first = {mdp.initial_state(), table.sample(mdp.initial_state(), rng)};
      break;
    case StartSpec::Kind::kPair:
      first = start.pair;
      break;
    case StartSpec::Kind::kSampler:
      if (!start.sampler) throw std::invalid_argument("rollout: empty sampler");
      first = start.sampler(rng);
      break;
  }
  check_pair(mdp, first);
  Trajectory tau;
  continue_episode(mdp, table, first, rng, max_steps, tau, counters);
  if (counters) {
    ++counters->trajectories;
    counters->transitions += tau.size();
  }
  return tau;
}

StateAction sample_from_discounted_occupancy(const TabularMdp& mdp,
                                             const Policy& policy, Rng& rng,
                                             RolloutCounters* counters,
                                             std::size_t max_steps) {
  const Trajectory tau = sample_discounted_trajectory(
      mdp, policy, StartSpec::initial(), rng, counters, max_steps);
  return tau.back();
}

StateAction Simulator::cover_sample(std::span<const Policy> cover, Rng& rng) {
  if (cover.empty()) throw std::invalid_argument("cover_sample: empty cover");
  const Policy& pick = cover[rng.index(cover.size())];
  return occupancy_sample(pick, rng);
}

Trajectory Simulator::rollout_from_cover(std::span<const Policy> cover,
                                         const Policy& policy, Rng& rng) {
  if (cover.empty()) {
    throw std::invalid_argument("rollout_from_cover: empty cover");
  }
  const Policy& pick = cover[rng.index(cover.size())];
  RolloutCounters prefix;
  const StateAction start = sample_from_discounted_occupancy(
      *mdp_, pick, rng, &prefix, max_steps_);
  counters_.transitions += prefix.transitions;
  counters_.truncated += prefix.truncated;
  return rollout(policy, StartSpec::at(start.state, start.action), rng);
}

}  // namespace pgrlhf
