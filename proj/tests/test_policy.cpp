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
#include "pgrlhf/features.hpp"
#include "pgrlhf/mdp.hpp"
#include "pgrlhf/policy.hpp"

using namespace pgrlhf;

namespace {

std::shared_ptr<const FeatureMap> onehot(int s, int a) {
  std::vector<double> t(static_cast<std::size_t>(s * a) * s * a, 0.0);
  for (int i = 0; i < s * a; ++i) t[static_cast<std::size_t>(i) * s * a + i] = 1.0;
  return std::make_shared<FeatureMap>(s, a, s * a, t);
}

}  // namespace

TEST_CASE("softmax rows") {
  const std::vector<double> scores = {std::log(3.0), 0.0, 1000.0, 1000.0};
  const auto p = softmax_rows(scores, 2, 2);
  CHECK(p[0] == doctest::Approx(0.75));
  CHECK(p[1] == doctest::Approx(0.25));
  CHECK(p[2] == doctest::Approx(0.5));
}

TEST_CASE("log-linear policy and one NPG step") {
  const auto fm = onehot(1, 2);
  auto pi = LogLinearPolicy::zero(fm);
  CHECK(pi.action_distribution(0)[0] == doctest::Approx(0.5));
  Eigen::VectorXd theta(2);
  theta << std::log(3.0), 0.0;
  const auto next = npg_step(pi, theta, 1.0);
  CHECK(next.action_distribution(0)[0] == doctest::Approx(0.75));
  CHECK(next.action_distribution(0)[1] == doctest::Approx(0.25));
  CHECK_THROWS_AS(npg_step(pi, Eigen::VectorXd::Zero(3), 1.0), std::invalid_argument);
}

TEST_CASE("repeated NPG steps are multiplicative weights") {
  // With a fixed advantage estimate, T steps give pi_T proportional to
  // pi_0 * exp(eta * T * theta).
  const auto fm = onehot(2, 3);
  auto pi = LogLinearPolicy::zero(fm);
  Eigen::VectorXd theta(6);
  theta << 0.2, -0.1, 0.4, 1.0, 0.0, -1.0;
  const double eta = 0.3;
  const int T = 17;
  for (int t = 0; t < T; ++t) pi = npg_step(pi, theta, eta);
  for (int s = 0; s < 2; ++s) {
    double z = 0.0;
    for (int a = 0; a < 3; ++a) z += std::exp(eta * T * theta(s * 3 + a));
    for (int a = 0; a < 3; ++a) {
      CHECK(pi.action_distribution(s)[a] ==
            doctest::Approx(std::exp(eta * T * theta(s * 3 + a)) / z).epsilon(1e-12));
    }
  }
}

TEST_CASE("log-linear json round trip") {
  const auto fm = onehot(2, 2);
  Eigen::VectorXd w(4);
  w << 0.1, 0.2, -0.3, 0.4;
  const LogLinearPolicy pi(fm, w);
  const auto back = LogLinearPolicy::from_json(pi.to_json(), fm);
  CHECK((back.parameters() - w).norm() == 0.0);
  CHECK(back.action_distribution(1)[1] == pi.action_distribution(1)[1]);
}

TEST_CASE("action table validation") {
  CHECK_THROWS_AS(ActionTable(1, 2, {0.6, 0.6}), std::invalid_argument);
  CHECK_THROWS_AS(ActionTable(1, 2, {1.2, -0.2}), std::invalid_argument);
  CHECK_NOTHROW(ActionTable(1, 2, {0.4, 0.6}));
}

TEST_CASE("bonus partition closed form 1/(c+zeta) against beta") {
  const auto fm = onehot(2, 2);
  CovarianceAccumulator acc(4, 1.0);
  // State 0: both actions seen 3 times; state 1: action 0 seen once.
  for (int i = 0; i < 3; ++i) {
    acc.accumulate(fm->feature(0, 0), 1.0);
    acc.accumulate(fm->feature(0, 1), 1.0);
  }
  acc.accumulate(fm->feature(1, 0), 1.0);
  const double beta = 0.4;  // 1/4 < beta <= 1/2
  const auto part = BonusPartition::linear(fm, acc.snapshot(), beta, 0.9);
  CHECK(part->quadratic_form(0, 0) == doctest::Approx(0.25));
  CHECK(part->quadratic_form(1, 0) == doctest::Approx(0.5));
  CHECK_FALSE(part->is_bonused(0, 1));
  CHECK(part->is_bonused(1, 0));
  CHECK(part->is_bonused(1, 1));
  CHECK(part->in_known_set(0));
  CHECK_FALSE(part->in_known_set(1));
  CHECK(part->bonus(1, 1) == doctest::Approx(10.0));
  CHECK(part->bonus(0, 0) == 0.0);
  CHECK(part->bonused_actions(1) == std::vector<int>{0, 1});
}

TEST_CASE("partitioned policy is uniform over bonused actions off K") {
  // Pair (1, 2) is bonused, others are not; state 1 is off K.
  auto form = [](int s, int a) { return (s == 1 && a == 2) ? 1.0 : 0.0; };
  auto part = std::make_shared<BonusPartition>(3, 3, form, 0.5, 0.9);
  auto inner = std::make_shared<ActionTable>(
      3, 3, std::vector<double>{0.2, 0.3, 0.5, 0.2, 0.3, 0.5, 1, 0, 0});
  const PartitionedPolicy pp(part, inner);
  CHECK(pp.action_distribution(0)[2] == doctest::Approx(0.5));
  CHECK(pp.action_distribution(1)[2] == doctest::Approx(1.0));
  CHECK(pp.action_distribution(1)[0] == 0.0);
  CHECK(pp.action_distribution(2)[0] == doctest::Approx(1.0));
  CHECK(pp.as_policy().kind() == Policy::Kind::kPartitioned);
}

TEST_CASE("freeze_partition rejects nonpositive beta") {
  const auto fm = onehot(1, 2);
  CovarianceAccumulator acc(2, 1.0);
  CHECK_THROWS_AS(freeze_partition(LogLinearPolicy::zero(fm), acc.snapshot(), 0.0, 0.9),
                  std::invalid_argument);
  // beta above every quadratic form: no bonus anywhere.
  const auto pp =
      freeze_partition(LogLinearPolicy::zero(fm), acc.snapshot(), 2.0, 0.9);
  CHECK(pp.partition().in_known_set(0));
  const auto j = partitioned_to_json(LogLinearPolicy::zero(fm), pp.partition());
  CHECK(j.contains("covariance_digest"));
}

TEST_CASE("mixtures draw a component per episode") {
  const Policy a(std::make_shared<ActionTable>(1, 2, std::vector<double>{1, 0}),
                 Policy::Kind::kTabular);
  const Policy b(std::make_shared<ActionTable>(1, 2, std::vector<double>{0, 1}),
                 Policy::Kind::kTabular);
  const auto mix = Policy::mixture({a, b, b});
  CHECK(mix.leaf_count() == 3u);
  CHECK(mix.action_distribution(0)[1] == doctest::Approx(2.0 / 3));
  Rng rng(1, 0);
  int hits_b = 0;
  const int n = 30000;
  for (int i = 0; i < n; ++i)
    hits_b += (&mix.draw_episode_table(rng) != &a.table()) ? 1 : 0;
  CHECK(std::abs(hits_b / double(n) - 2.0 / 3) < 4 * std::sqrt(2.0 / 9 / n));
  CHECK_THROWS_AS(Policy::mixture({}), std::invalid_argument);
  CHECK_THROWS(mix.table());
}
