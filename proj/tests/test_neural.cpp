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
#include "neural_checks.hpp"
#include "pgrlhf/neural.hpp"
#include "pgrlhf/reward_oracle.hpp"

using namespace pgrlhf;
using pgrlhf::testing::sv;

namespace {

TwoLayerRelu hand_net() {
  Eigen::VectorXd w0(4);
  w0 << 1, 0, 0, 1;
  return TwoLayerRelu(2, 2, 1.0, {1.0, 1.0}, w0, w0, 0.5, 1.5);
}

}  // namespace

TEST_CASE("two-unit hand example") {
  const auto net = hand_net();
  const std::vector<double> phi = {1.0, 0.0};
  CHECK(net.value(phi) == doctest::Approx(1.0 / std::sqrt(2.0)));
  const std::vector<double> neg = {-1.0, -1.0};
  CHECK(net.value(neg) == 0.0);
  const auto psi = relu_feature(net, sv(net.params()), phi);
  // Only unit 1 is active.
  CHECK(psi(0) == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(psi(2) == 0.0);
}

TEST_CASE("f equals psi^T w at the same parameters") {
  Rng rng(51, 0);
  const auto net = TwoLayerRelu::initialize(64, 8, 5.0, rng);
  for (int t = 0; t < 50; ++t) {
    Eigen::VectorXd phi(8), w = net.init();
    for (int j = 0; j < 8; ++j) phi(j) = rng.normal() / 3;
    for (Eigen::Index i = 0; i < w.size(); ++i) w(i) += 0.2 * rng.normal();
    const double f = net.value_at(sv(w), sv(phi));
    const double lin = relu_feature(net, sv(w), sv(phi)).dot(w);
    CHECK(std::abs(f - lin) <= 1e-12 * std::max(1.0, std::abs(f)));
  }
}

TEST_CASE("gradient matches finite differences away from kinks") {
  int checked = 0;
  const double err = testing::max_fd_relative_error(52, 64, 8, 20, &checked);
  CHECK(checked >= 10);
  CHECK(err <= 1e-5);
}

TEST_CASE("initialization and projection") {
  Rng rng(53, 0);
  const auto net = TwoLayerRelu::initialize(16, 3, 2.0, rng);
  for (int l = 0; l < 16; ++l) {
    const double n = net.init().segment(3 * l, 3).norm();
    CHECK(n >= 0.5 - 1e-12);
    CHECK(n <= 1.5 + 1e-12);
    CHECK(std::abs(net.signs()[l]) == 1.0);
  }
  Eigen::VectorXd far = net.init() + Eigen::VectorXd::Constant(48, 10.0);
  const auto p = net.project(far);
  CHECK((p - net.init()).norm() == doctest::Approx(2.0));
  const auto moved = net.with_params(far);
  CHECK((moved.params() - net.init()).norm() == doctest::Approx(2.0));
  CHECK_THROWS_AS(TwoLayerRelu(16, 3, 2.0, net.signs(), net.init(), far, 0.5, 1.5),
                  std::invalid_argument);
  Eigen::VectorXd tiny = Eigen::VectorXd::Constant(4, 0.01);
  CHECK_THROWS_AS(TwoLayerRelu(2, 2, 1.0, {1, 1}, tiny, tiny, 0.5, 1.5),
                  std::invalid_argument);
  CHECK_THROWS_AS(TwoLayerRelu::initialize(0, 3, 1.0, rng), std::invalid_argument);
}

TEST_CASE("checkpoint json round trip") {
  Rng rng(54, 0);
  const auto net = TwoLayerRelu::initialize(8, 3, 1.0, rng);
  const auto moved = net.with_params(net.init() + Eigen::VectorXd::Constant(24, 0.05));
  const auto back = TwoLayerRelu::from_json(moved.to_json());
  CHECK((back.params() - moved.params()).norm() == 0.0);
  CHECK((back.init() - moved.init()).norm() == 0.0);
  CHECK(back.signs() == moved.signs());
  CHECK(back.radius() == moved.radius());
}

TEST_CASE("Gram-matrix quadratic forms match the dense covariance") {
  Rng rng(55, 0);
  // 2 states, 3 actions, d = 3 random features with norm <= 1.
  std::vector<double> table(18);
  for (int p = 0; p < 6; ++p) {
    Eigen::Vector3d v(rng.normal(), rng.normal(), rng.normal());
    v /= std::max(1.0, v.norm());
    for (int j = 0; j < 3; ++j) table[p * 3 + j] = v(j);
  }
  const FeatureMap fm(2, 3, 3, table);
  const auto net = TwoLayerRelu::initialize(4, 3, 1.0, rng);
  NeuralCoverage cov(net, fm, 0.7);
  cov.accumulate(0, 1, 0.5);
  cov.accumulate(1, 2, 0.25);
  cov.accumulate(0, 1, 0.125);
  cov.accumulate(1, 0, 1.0);
  const Eigen::MatrixXd inv = cov.dense_matrix().inverse();
  const auto qf = cov.quadratic_forms();
  for (int s = 0; s < 2; ++s)
    for (int a = 0; a < 3; ++a) {
      const auto psi = relu_feature(net, sv(net.init()), fm.feature(s, a));
      CHECK(qf[s * 3 + a] == doctest::Approx(psi.dot(inv * psi)).epsilon(1e-9));
    }
  const auto part = cov.partition(0.3, 0.9);
  for (int s = 0; s < 2; ++s)
    for (int a = 0; a < 3; ++a) CHECK(part->is_bonused(s, a) == (qf[s * 3 + a] >= 0.3));
  CHECK_THROWS_AS(cov.accumulate(2, 0, 1.0), std::out_of_range);
}

TEST_CASE("neural policy step stores alpha*w + eta*theta") {
  Rng rng(56, 0);
  const auto fm = std::make_shared<const FeatureMap>(FeatureMap(1, 2, 2, {1, 0, 0, 1}));
  const auto net = std::make_shared<const TwoLayerRelu>(TwoLayerRelu::initialize(8, 2, 1.0, rng));
  const NeuralPolicy pi(net, fm);
  CHECK((pi.alpha_w() - net->init()).norm() == 0.0);
  const auto same = pi.step(Eigen::VectorXd::Zero(16), 0.3);
  CHECK(same.as_policy().table().probability(0, 0) ==
        doctest::Approx(pi.as_policy().table().probability(0, 0)));
  const Eigen::VectorXd theta = Eigen::VectorXd::Constant(16, 1.0);
  const auto next = pi.step(theta, 0.5);
  CHECK((next.alpha_w() - (net->init() + 0.5 * theta)).norm() < 1e-15);
  const double f0 = net->value_at(sv(next.alpha_w()), fm->feature(0, 0));
  const double f1 = net->value_at(sv(next.alpha_w()), fm->feature(0, 1));
  CHECK(next.as_policy().table().probability(0, 0) ==
        doctest::Approx(1.0 / (1.0 + std::exp(f1 - f0))));
  CHECK(next.as_policy().kind() == Policy::Kind::kNeural);
}

TEST_CASE("reward network training lowers the BT loss on 9 of 10 seeds") {
  int ok = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto [before, after] = testing::reward_training_losses(seed, 64);
    ok += after < before ? 1 : 0;
  }
  CHECK(ok >= 9);
}

TEST_CASE("Q network MSE decreases over averaged checkpoints on 9 of 10 seeds") {
  int ok = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto mse = testing::q_fit_mse_curve(seed, 64, {50, 200, 800, 3200});
    ok += testing::strictly_decreasing(mse) ? 1 : 0;
  }
  CHECK(ok >= 9);
}

TEST_CASE("NN-PG-RLHF smoke run with N = 1, T = 1") {
  const auto mdp = build_bidirectional_lock(2, 0.9);
  const auto fm = std::make_shared<const FeatureMap>(one_hot_features(mdp));
  auto handle = std::make_shared<RewardOracleHandle>(
      mdp.num_states(), mdp.num_actions(),
      std::vector<double>(mdp.rewards().begin(), mdp.rewards().end()));
  handle->set_poisoned(true);
  PreferenceOracle oracle(handle);
  NeuralConfig cfg;
  cfg.phases = 1;
  cfg.iterations = 1;
  cfg.coverage_samples = 20;
  cfg.hf_queries = 10;
  cfg.q_sgd_steps = 15;
  cfg.reward_sgd_steps = 30;
  cfg.width = 8;
  Rng rng(57, 0);
  const auto res = run_nn_pg_rlhf(mdp, fm, oracle, default_baseline_policy(mdp), cfg, rng);
  CHECK(res.phases.size() == 1u);
  CHECK(res.counters.trajectories == 20u + 2u * 10u + 2u * 15u);
  CHECK(res.queries == 10u);
  CHECK(handle->direct_reads() == 0u);
  CHECK(res.phases[0].mu_norm <= cfg.radius + 1e-9);
  cfg.width = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
