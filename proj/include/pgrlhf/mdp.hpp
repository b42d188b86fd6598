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

#ifndef PGRLHF_MDP_HPP_
#define PGRLHF_MDP_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "pgrlhf/rng.hpp"

namespace pgrlhf {

struct StateAction {
  int state = 0;
  int action = 0;

  friend bool operator==(const StateAction&, const StateAction&) = default;
};

// A rollout: the ordered (state, action) pairs observed before geometric
// termination. Never empty; H(tau) is steps.size() - 1.
struct Trajectory {
  std::vector<StateAction> steps;

  std::size_t size() const { return steps.size(); }
  std::size_t horizon() const { return steps.size() - 1; }
  const StateAction& back() const { return steps.back(); }
};

// Finite discounted MDP with a fixed initial state.
//
// Transition probabilities are stored densely as P[(s * A + a) * S + s'] and
// also as per-(s, a) successor lists with cumulative probabilities, which is
// what the samplers use.
class TabularMdp {
 public:
  static constexpr double kRowTolerance = 1e-12;

  // Throws std::invalid_argument if any invariant fails: row sums within
  // kRowTolerance of one, nonnegative probabilities, rewards in [0, 1],
  // gamma in [0, 1), initial state in range.
  TabularMdp(int num_states, int num_actions, std::vector<double> transition,
             std::vector<double> reward, int initial_state, double gamma);

  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }
  int num_pairs() const { return num_states_ * num_actions_; }
  int initial_state() const { return initial_state_; }
  double gamma() const { return gamma_; }

  int pair_index(int s, int a) const { return s * num_actions_ + a; }
  bool valid(int s, int a) const {
    return s >= 0 && s < num_states_ && a >= 0 && a < num_actions_;
  }

  double reward(int s, int a) const { return reward_[pair_index(s, a)]; }
  std::span<const double> rewards() const { return reward_; }

  // P(. | s, a) as a dense row of length num_states().
  std::span<const double> transition_row(int s, int a) const {
    return {transition_.data() +
                static_cast<std::size_t>(pair_index(s, a)) * num_states_,
            static_cast<std::size_t>(num_states_)};
  }
  std::span<const double> transitions() const { return transition_; }

  int sample_next_state(int s, int a, Rng& rng) const;

  // Same dynamics, different reward table (validated).
  TabularMdp with_reward(std::vector<double> reward) const;

  nlohmann::json to_json() const;
  static TabularMdp from_json(const nlohmann::json& j);

 private:
  int num_states_;
  int num_actions_;
  int initial_state_;
  double gamma_;
  std::vector<double> transition_;
  std::vector<double> reward_;
  // Sparse successors per pair: offsets into successor_state_/successor_cdf_.
  std::vector<std::size_t> successor_offset_;
  std::vector<int> successor_state_;
  std::vector<double> successor_cdf_;
};

// State layout of the Bidirectional Lock:
//   0                 s_0
//   1 .. H            lock 1, good chain (level h at index h)
//   H+1 .. 2H         lock 1, bad chain
//   2H+1 .. 3H        lock 2, good chain
//   3H+1 .. 4H        lock 2, bad chain
//   4H+1              absorbing end state
// Action 0 is the good action; actions 1..4 are the four (identical) bad
// actions.
struct BidirectionalLockLayout {
  int horizon;

  static constexpr int kNumActions = 5;
  static constexpr int kGoodAction = 0;

  int num_states() const { return 4 * horizon + 2; }
  int start() const { return 0; }
  int good(int lock, int level) const {
    return 1 + (lock - 1) * 2 * horizon + (level - 1);
  }
  int bad(int lock, int level) const { return good(lock, level) + horizon; }
  int absorbing() const { return 4 * horizon + 1; }
};

// Throws std::invalid_argument when horizon < 1.
TabularMdp build_bidirectional_lock(int horizon, double gamma = 0.9);

}  // namespace pgrlhf

#endif  // PGRLHF_MDP_HPP_
