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

#ifndef PGRLHF_ROLLOUT_HPP_
#define PGRLHF_ROLLOUT_HPP_

#include <cstdint>
#include <functional>
#include <span>

#include "pgrlhf/mdp.hpp"
#include "pgrlhf/policy.hpp"
#include "pgrlhf/rng.hpp"

namespace pgrlhf {

// Default per-rollout step cap. Rollouts that reach it are cut and counted.
inline constexpr std::size_t kDefaultMaxSteps = 20000;

struct RolloutCounters {
  std::uint64_t trajectories = 0;
  // Recorded (state, action) steps, i.e. environment interactions.
  std::uint64_t transitions = 0;
  std::uint64_t truncated = 0;

  RolloutCounters& operator+=(const RolloutCounters& o) {
    trajectories += o.trajectories;
    transitions += o.transitions;
    truncated += o.truncated;
    return *this;
  }
};

// Where a rollout starts.
struct StartSpec {
  enum class Kind { kInitial, kPair, kSampler };

  Kind kind = Kind::kInitial;
  StateAction pair;
  std::function<StateAction(Rng&)> sampler;

  static StartSpec initial() { return {}; }
  static StartSpec at(int s, int a) {
    StartSpec spec;
    spec.kind = Kind::kPair;
    spec.pair = {s, a};
    return spec;
  }
  static StartSpec from(std::function<StateAction(Rng&)> sampler) {
    StartSpec spec;
    spec.kind = Kind::kSampler;
    spec.sampler = std::move(sampler);
    return spec;
  }
};

// Rolls out `policy`. After each recorded step the episode ends with
// probability 1 - gamma, otherwise the state advances through P. A fixed or
// sampled start pair is recorded as the first step; the policy acts from
// the second step on. Mixtures pick their component once, up front.
// `counters` (optional) gets one trajectory and one transition per step.
Trajectory sample_discounted_trajectory(const TabularMdp& mdp,
                                        const Policy& policy,
                                        const StartSpec& start, Rng& rng,
                                        RolloutCounters* counters = nullptr,
                                        std::size_t max_steps = kDefaultMaxSteps);

// Final pair of a geometric rollout from the initial state: an exact draw
// from the discounted occupancy d^pi.
StateAction sample_from_discounted_occupancy(
    const TabularMdp& mdp, const Policy& policy, Rng& rng,
    RolloutCounters* counters = nullptr,
    std::size_t max_steps = kDefaultMaxSteps);

// Environment wrapper that owns the interaction counters. Learners only
// touch the MDP through one of these.
class Simulator {
 public:
  explicit Simulator(const TabularMdp& mdp,
                     std::size_t max_steps = kDefaultMaxSteps)
      : mdp_(&mdp), max_steps_(max_steps) {}

  const TabularMdp& mdp() const { return *mdp_; }
  const RolloutCounters& counters() const { return counters_; }
  std::size_t max_steps() const { return max_steps_; }

  Trajectory rollout(const Policy& policy, const StartSpec& start, Rng& rng) {
    return sample_discounted_trajectory(*mdp_, policy, start, rng, &counters_,
                                        max_steps_);
  }
  StateAction occupancy_sample(const Policy& policy, Rng& rng) {
    return sample_from_discounted_occupancy(*mdp_, policy, rng, &counters_,
                                            max_steps_);
  }
  // Draw from rho_cov = Unif over d^{pi_i} for the given cover: one
  // uniformly chosen policy, then an occupancy sample.
  StateAction cover_sample(std::span<const Policy> cover, Rng& rng);

  // A cover draw used as the start of the same episode as the rollout that
  // follows it: the prefix's steps are counted as transitions but the pair
  // counts as one trajectory.
  Trajectory rollout_from_cover(std::span<const Policy> cover,
                                const Policy& policy, Rng& rng);

 private:
  const TabularMdp* mdp_;
  std::size_t max_steps_;
  RolloutCounters counters_;
};

}  // namespace pgrlhf

#endif  // PGRLHF_ROLLOUT_HPP_
