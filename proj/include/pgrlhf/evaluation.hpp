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

#ifndef PGRLHF_EVALUATION_HPP_
#define PGRLHF_EVALUATION_HPP_

#include <Eigen/Dense>
#include <vector>

#include "pgrlhf/mdp.hpp"
#include "pgrlhf/policy.hpp"
#include "pgrlhf/reward_fn.hpp"

namespace pgrlhf {

// Exact tabular oracles. These see the full model and are meant for
// evaluation and tests, never for the learner.

// V^pi for every state, from (I - gamma P_pi) V = r_pi. Mixtures are the
// average of their component values.
Eigen::VectorXd exact_policy_value(const TabularMdp& mdp, const Policy& policy,
                                   const std::vector<double>& reward);
Eigen::VectorXd exact_policy_value(const TabularMdp& mdp, const Policy& policy,
                                   const RewardFn& reward);
// Uses the MDP's own reward table.
Eigen::VectorXd exact_policy_value(const TabularMdp& mdp, const Policy& policy);

// Q^pi(s, a) laid out as s * A + a.
std::vector<double> exact_q_values(const TabularMdp& mdp, const Policy& policy,
                                   const std::vector<double>& reward);

// d^pi(s, a) from the initial state, laid out as s * A + a.
std::vector<double> exact_occupancy(const TabularMdp& mdp,
                                    const Policy& policy);

struct ValueIterationResult {
  Eigen::VectorXd values;
  std::vector<int> greedy_actions;
  int num_actions = 0;
  int iterations = 0;
  double residual = 0.0;  // sup |T V - V| at the returned V
  Policy greedy_policy() const;
};

// Iterates the Bellman optimality operator until successive iterates differ
// by at most `tolerance` in sup norm. Ties go to the lowest action index.
// Throws std::invalid_argument for tolerance <= 0.
ValueIterationResult value_iteration(const TabularMdp& mdp,
                                     double tolerance = 1e-10);

// (V* - V) / V*; V* must be positive.
double normalized_suboptimality(double v_star, double v);

}  // namespace pgrlhf

#endif  // PGRLHF_EVALUATION_HPP_
