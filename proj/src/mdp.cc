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

#include "pgrlhf/mdp.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace pgrlhf {
namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument("TabularMdp: " + message);
}

}  // namespace

TabularMdp::TabularMdp(int num_states, int num_actions,
                       std::vector<double> transition,
                       std::vector<double> reward, int initial_state,
                       double gamma)
    : num_states_(num_states),
      num_actions_(num_actions),
      initial_state_(initial_state),
      gamma_(gamma),
      transition_(std::move(transition)),
      reward_(std::move(reward)) {
  require(num_states > 0 && num_actions > 0, "empty state or action set");
  const auto pairs = static_cast<std::size_t>(num_states) * num_actions;
  require(transition_.size() == pairs * num_states,
          "transition tensor has wrong size");
  require(reward_.size() == pairs, "reward table has wrong size");
  require(initial_state >= 0 && initial_state < num_states,
          "initial state out of range");
  require(gamma >= 0.0 && gamma < 1.0, "gamma must lie in [0, 1)");
  for (double r : reward_) {
    require(std::isfinite(r) && r >= 0.0 && r <= 1.0,
            "rewards must lie in [0, 1]");
  }

  successor_offset_.reserve(pairs + 1);
  successor_offset_.push_back(0);
  for (std::size_t p = 0; p < pairs; ++p) {
    double sum = 0.0;
    for (int s2 = 0; s2 < num_states; ++s2) {
      const double prob = transition_[p * num_states + s2];
      require(std::isfinite(prob) && prob >= 0.0,
              "transition probabilities must be nonnegative");
      if (prob > 0.0) {
        sum += prob;
        successor_state_.push_back(s2);
        successor_cdf_.push_back(sum);
      }
    }
    require(std::abs(sum - 1.0) <= kRowTolerance,
            "transition row " + std::to_string(p) + " sums to " +
                std::to_string(sum));
    successor_offset_.push_back(successor_state_.size());
  }
}

int TabularMdp::sample_next_state(int s, int a, Rng& rng) const {
  const auto p = static_cast<std::size_t>(pair_index(s, a));
  const std::size_t begin = successor_offset_[p];
  const std::size_t end = successor_offset_[p + 1];
  if (end - begin == 1) return successor_state_[begin];
  const std::size_t k = rng.from_cdf(
      std::span<const double>(successor_cdf_.data() + begin, end - begin));
  return successor_state_[begin + k];
}

TabularMdp TabularMdp::with_reward(std::vector<double> reward) const {
  return TabularMdp(num_states_, num_actions_, transition_, std::move(reward),
                    initial_state_, gamma_);
}

nlohmann::json TabularMdp::to_json() const {
  nlohmann::json j;
  j["num_states"] = num_states_;
  j["num_actions"] = num_actions_;
  j["initial_state"] = initial_state_;
  j["gamma"] = gamma_;
  // transitions[s][a] is the dense next-state row; rewards[s][a].
  nlohmann::json transitions = nlohmann::json::array();
  nlohmann::json rewards = nlohmann::json::array();
  for (int s = 0; s < num_states_; ++s) {
    nlohmann::json per_action = nlohmann::json::array();
    nlohmann::json reward_row = nlohmann::json::array();
    for (int a = 0; a < num_actions_; ++a) {
      const auto row = transition_row(s, a);
      per_action.push_back(std::vector<double>(row.begin(), row.end()));
      reward_row.push_back(reward(s, a));
    }
    transitions.push_back(std::move(per_action));
    rewards.push_back(std::move(reward_row));
  }
  j["transitions"] = std::move(transitions);
  j["rewards"] = std::move(rewards);
  return j;
}

TabularMdp TabularMdp::from_json(const nlohmann::json& j) {
  try {
    const int num_states = j.at("num_states").get<int>();
    const int num_actions = j.at("num_actions").get<int>();
    require(num_states > 0 && num_actions > 0, "empty state or action set");
    const auto& transitions = j.at("transitions");
    const auto& rewards = j.at("rewards");
    require(transitions.size() == static_cast<std::size_t>(num_states) &&
                rewards.size() == static_cast<std::size_t>(num_states),
            "transitions/rewards must have num_states rows");
    std::vector<double> p;
    std::vector<double> r;
    p.reserve(static_cast<std::size_t>(num_states) * num_actions * num_states);
    for (int s = 0; s < num_states; ++s) {
      require(transitions[s].size() == static_cast<std::size_t>(num_actions) &&
                  rewards[s].size() == static_cast<std::size_t>(num_actions),
              "each state needs num_actions entries");
      for (int a = 0; a < num_actions; ++a) {
        const auto row = transitions[s][a].get<std::vector<double>>();
        require(row.size() == static_cast<std::size_t>(num_states),
                "transition rows need num_states entries");
        p.insert(p.end(), row.begin(), row.end());
        r.push_back(rewards[s][a].get<double>());
      }
    }
    return TabularMdp(num_states, num_actions, std::move(p), std::move(r),
                      j.value("initial_state", 0), j.at("gamma").get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("TabularMdp JSON: ") + e.what());
  }
}

TabularMdp build_bidirectional_lock(int horizon, double gamma) {
  if (horizon < 1) {
    throw std::invalid_argument("build_bidirectional_lock: horizon must be >= 1");
  }
  const BidirectionalLockLayout lock{horizon};
  const int num_states = lock.num_states();
  const int num_actions = BidirectionalLockLayout::kNumActions;
  const int good_action = BidirectionalLockLayout::kGoodAction;
  std::vector<double> p(
      static_cast<std::size_t>(num_states) * num_actions * num_states, 0.0);
  std::vector<double> r(static_cast<std::size_t>(num_states) * num_actions,
                        0.0);
  auto prob = [&](int s, int a, int s2) -> double& {
    return p[(static_cast<std::size_t>(s) * num_actions + a) * num_states + s2];
  };
  auto set_reward = [&](int s, double value) {
    for (int a = 0; a < num_actions; ++a) r[s * num_actions + a] = value;
  };

  for (int a = 0; a < num_actions; ++a) {
    if (a == good_action) {
      prob(lock.start(), a, lock.good(1, 1)) = 1.0;
    } else {
      prob(lock.start(), a, lock.bad(1, 1)) = 1.0 / 3.0;
      prob(lock.start(), a, lock.good(2, 1)) = 1.0 / 3.0;
      prob(lock.start(), a, lock.bad(2, 1)) = 1.0 / 3.0;
    }
  }
  for (int l = 1; l <= 2; ++l) {
    for (int h = 1; h <= horizon; ++h) {
      for (int a = 0; a < num_actions; ++a) {
        if (h == horizon) {
          prob(lock.good(l, h), a, lock.absorbing()) = 1.0;
          prob(lock.bad(l, h), a, lock.absorbing()) = 1.0;
          continue;
        }
        if (a == good_action) {
          prob(lock.good(l, h), a, lock.good(l, h + 1)) = 0.95;
          prob(lock.good(l, h), a, lock.bad(l, h + 1)) = 0.05;
        } else {
          prob(lock.good(l, h), a, lock.bad(l, h + 1)) = 1.0;
        }
        prob(lock.bad(l, h), a, lock.bad(l, h + 1)) = 1.0;
      }
      set_reward(lock.bad(l, h), 0.1 / horizon);
    }
  }
  for (int a = 0; a < num_actions; ++a) {
    prob(lock.absorbing(), a, lock.absorbing()) = 1.0;
  }
  set_reward(lock.good(1, horizon), 1.0);
  set_reward(lock.good(2, horizon), 0.3);

  return TabularMdp(num_states, num_actions, std::move(p), std::move(r),
                    lock.start(), gamma);
}

}  // namespace pgrlhf
