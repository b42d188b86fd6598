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

#include "pgrlhf/evaluation.hpp"

#include <cmath>
#include <stdexcept>

namespace pgrlhf {
namespace {

void check_shapes(const TabularMdp& mdp, const Policy& policy,
                  std::size_t reward_size) {
  if (policy.num_states() != mdp.num_states() ||
      policy.num_actions() != mdp.num_actions()) {
    throw std::invalid_argument("exact evaluation: policy/MDP shape mismatch");
  }
  if (reward_size != static_cast<std::size_t>(mdp.num_pairs())) {
    throw std::invalid_argument("exact evaluation: reward has wrong size");
  }
}

// Builds I - gamma P_pi and r_pi for a leaf table.
void policy_system(const TabularMdp& mdp, const ActionTable& table,
                   const std::vector<double>& reward, Eigen::MatrixXd& lhs,
                   Eigen::VectorXd& rhs) {
  const int S = mdp.num_states();
  const int A = mdp.num_actions();
  lhs = Eigen::MatrixXd::Identity(S, S);
  rhs = Eigen::VectorXd::Zero(S);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      const double p = table.probability(s, a);
      if (p == 0.0) continue;
      rhs(s) += p * reward[static_cast<std::size_t>(s) * A + a];
      const auto row = mdp.transition_row(s, a);
      for (int s2 = 0; s2 < S; ++s2) {
        if (row[s2] != 0.0) lhs(s, s2) -= mdp.gamma() * p * row[s2];
      }
    }
  }
}

template <typename LeafFn>
Eigen::VectorXd average_over_components(const Policy& policy, LeafFn&& leaf) {
  if (!policy.is_mixture()) return leaf(policy.table());
  Eigen::VectorXd sum;
  for (const auto& c : policy.components()) {
    Eigen::VectorXd v = average_over_components(c, leaf);
    if (sum.size() == 0) {
      sum = std::move(v);
    } else {
      sum += v;
    }
  }
  return sum / static_cast<double>(policy.components().size());
}

}  // namespace

Eigen::VectorXd exact_policy_value(const TabularMdp& mdp, const Policy& policy,
                                   const std::vector<double>& reward) {
  check_shapes(mdp, policy, reward.size());
  return average_over_components(policy, [&](const ActionTable& t) {
    Eigen::MatrixXd lhs;
    Eigen::VectorXd rhs;
    policy_system(mdp, t, reward, lhs, rhs);
    return Eigen::VectorXd(lhs.partialPivLu().solve(rhs));
  });
}

Eigen::VectorXd exact_policy_value(const TabularMdp& mdp, const Policy& policy,
                                   const RewardFn& reward) {
  return exact_policy_value(mdp, policy, reward.materialize());
}

Eigen::VectorXd exact_policy_value(const TabularMdp& mdp,
                                   const Policy& policy) {
  const auto r = mdp.rewards();
  return exact_policy_value(mdp, policy, std::vector<double>(r.begin(), r.end()));
}

std::vector<double> exact_q_values(const TabularMdp& mdp, const Policy& policy,
                                   const std::vector<double>& reward) {
  check_shapes(mdp, policy, reward.size());
  const int S = mdp.num_states();
  const int A = mdp.num_actions();
  // Q of a per-episode mixture is the average of component Q's.
  const Eigen::VectorXd q =
      average_over_components(policy, [&](const ActionTable& t) {
        Eigen::MatrixXd lhs;
        Eigen::VectorXd rhs;
        policy_system(mdp, t, reward, lhs, rhs);
        const Eigen::VectorXd v = lhs.partialPivLu().solve(rhs);
        Eigen::VectorXd out(S * A);
        for (int s = 0; s < S; ++s) {
          for (int a = 0; a < A; ++a) {
            const auto row = mdp.transition_row(s, a);
            double next = 0.0;
            for (int s2 = 0; s2 < S; ++s2) next += row[s2] * v(s2);
            out(s * A + a) = reward[static_cast<std::size_t>(s) * A + a] +
                             mdp.gamma() * next;
          }
        }
        return out;
      });
  return {q.data(), q.data() + q.size()};
}

std::vector<double> exact_occupancy(const TabularMdp& mdp,
                                    const Policy& policy) {
  const int S = mdp.num_states();
  const int A = mdp.num_actions();
  check_shapes(mdp, policy, static_cast<std::size_t>(S) * A);
  const Eigen::VectorXd d =
      average_over_components(policy, [&](const ActionTable& t) {
        Eigen::MatrixXd lhs;
        Eigen::VectorXd rhs;
        policy_system(mdp, t, std::vector<double>(S * A, 0.0), lhs, rhs);
        // Row s_init of (1 - gamma)(I - gamma P_pi)^{-1}: solve the transpose.
        Eigen::VectorXd e = Eigen::VectorXd::Zero(S);
        e(mdp.initial_state()) = 1.0;
        const Eigen::VectorXd state_occ =
            (1.0 - mdp.gamma()) * lhs.transpose().partialPivLu().solve(e);
        Eigen::VectorXd out(S * A);
        for (int s = 0; s < S; ++s) {
          for (int a = 0; a < A; ++a) {
            out(s * A + a) = state_occ(s) * t.probability(s, a);
          }
        }
        return out;
      });
  return {d.data(), d.data() + d.size()};
}

Policy ValueIterationResult::greedy_policy() const {
  const int S = static_cast<int>(greedy_actions.size());
  if (S == 0 || num_actions <= 0) {
    throw std::logic_error("greedy_policy: empty result");
  }
  std::vector<double> probs(static_cast<std::size_t>(S) * num_actions, 0.0);
  for (int s = 0; s < S; ++s) {
    probs[static_cast<std::size_t>(s) * num_actions + greedy_actions[s]] = 1.0;
  }
  return Policy(std::make_shared<const ActionTable>(S, num_actions,
                                                    std::move(probs)),
                Policy::Kind::kTabular);
}

ValueIterationResult value_iteration(const TabularMdp& mdp, double tolerance) {
  if (!(tolerance > 0.0)) {
    throw std::invalid_argument("value_iteration: tolerance must be > 0");
  }
  const int S = mdp.num_states();
  const int A = mdp.num_actions();
  const double gamma = mdp.gamma();
  Eigen::VectorXd v = Eigen::VectorXd::Zero(S);
  Eigen::VectorXd next(S);
  std::vector<int> greedy(S, 0);

  auto sweep = [&](const Eigen::VectorXd& in, Eigen::VectorXd& out) {
    for (int s = 0; s < S; ++s) {
      double best = 0.0;
      int best_a = -1;
      for (int a = 0; a < A; ++a) {
        const auto row = mdp.transition_row(s, a);
        double q = mdp.reward(s, a);
        double cont = 0.0;
        for (int s2 = 0; s2 < S; ++s2) cont += row[s2] * in(s2);
        q += gamma * cont;
        if (best_a < 0 || q > best) {
          best = q;
          best_a = a;
        }
      }
      out(s) = best;
      greedy[s] = best_a;
    }
  };

  ValueIterationResult result;
  result.num_actions = A;
  for (;;) {
    sweep(v, next);
    ++result.iterations;
    const double diff = (next - v).cwiseAbs().maxCoeff();
    v.swap(next);
    if (diff <= tolerance) break;
  }
  // Residual and greedy actions at the returned iterate.
  sweep(v, next);
  result.residual = (next - v).cwiseAbs().maxCoeff();
  result.values = std::move(v);
  result.greedy_actions = std::move(greedy);
  return result;
}

double normalized_suboptimality(double v_star, double v) {
  if (!(v_star > 0.0)) {
    throw std::invalid_argument("normalized_suboptimality: V* must be > 0");
  }
  return (v_star - v) / v_star;
}

}  // namespace pgrlhf
