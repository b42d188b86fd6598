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
#include "pgrlhf/features.hpp"
#include "pgrlhf/mdp.hpp"
#include "pgrlhf/rng.hpp"

using namespace pgrlhf;

TEST_CASE("one-hot features and trajectory sums") {
  const auto mdp = build_bidirectional_lock(2, 0.9);
  const auto fm = one_hot_features(mdp);
  CHECK(fm.dimension() == mdp.num_pairs());
  CHECK(fm.feature(3, 2)[mdp.pair_index(3, 2)] == 1.0);
  Trajectory t1{{{0, 1}, {3, 2}, {0, 1}}};
  Trajectory t2{{{3, 2}}};
  const auto s = trajectory_feature_sum(fm, t1);
  CHECK(s(mdp.pair_index(0, 1)) == 2.0);
  const auto d = trajectory_feature_difference(fm, t1, t2);
  CHECK(d(mdp.pair_index(3, 2)) == 0.0);
  CHECK(d.sum() == 2.0);
  std::vector<double> w(fm.dimension(), 0.0);
  w[mdp.pair_index(1, 4)] = 2.5;
  std::vector<double> out(5);
  fm.scores(1, w, out);
  CHECK(out[4] == 2.5);
  CHECK(out[0] == 0.0);
}

TEST_CASE("feature map rejects rows with norm above one") {
  CHECK_THROWS_AS(FeatureMap(1, 1, 2, {1.0, 0.5}), std::invalid_argument);
  CHECK_THROWS_AS(FeatureMap(1, 2, 2, {1.0, 0.0}), std::invalid_argument);
}

TEST_CASE("covariance quadratic form on the axis: 1/(c + zeta)") {
  CovarianceAccumulator acc(3, 1.0);
  const std::vector<double> e0 = {1, 0, 0};
  CHECK(acc.inv_quadratic_form(e0) == doctest::Approx(1.0));
  acc.accumulate(e0, 1.0);
  CHECK(acc.inv_quadratic_form(e0) == doctest::Approx(0.5));
  for (int c = 2; c <= 10; ++c) {
    acc.accumulate(e0, 1.0);
    CHECK(acc.inv_quadratic_form(e0) == doctest::Approx(1.0 / (c + 1.0)));
  }
  CHECK(acc.sample_count() == 10u);
  const std::vector<double> e1 = {0, 1, 0};
  CHECK(acc.inv_quadratic_form(e1) == doctest::Approx(1.0));
  CHECK(acc.quadratic_form(e0) == doctest::Approx(10.0));
  CHECK_THROWS_AS(acc.accumulate(e0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(acc.accumulate(std::vector<double>{1.0}, 1.0),
                  std::invalid_argument);
}

TEST_CASE("covariance matches a dense inverse") {
  Rng rng(12, 0);
  const int d = 7;
  CovarianceAccumulator acc(d, 0.3);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(d, d);
  for (int i = 0; i < 40; ++i) {
    Eigen::VectorXd v(d);
    for (int j = 0; j < d; ++j) v(j) = rng.normal();
    const double w = 0.5 + rng.uniform();
    acc.accumulate(v, w);
    m += w * v * v.transpose();
  }
  const Eigen::MatrixXd reg = m + 0.3 * Eigen::MatrixXd::Identity(d, d);
  CHECK((acc.matrix() - m).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((acc.regularized_matrix() - reg).cwiseAbs().maxCoeff() < 1e-10);
  const Eigen::MatrixXd inv = reg.inverse();
  for (int t = 0; t < 10; ++t) {
    Eigen::VectorXd x(d);
    for (int j = 0; j < d; ++j) x(j) = rng.normal();
    const double want = x.dot(inv * x);
    CHECK(acc.inv_quadratic_form(x) == doctest::Approx(want).epsilon(1e-9));
    const auto snap = acc.snapshot();
    CHECK(snap.inv_quadratic_form({x.data(), static_cast<std::size_t>(d)}) ==
          doctest::Approx(want).epsilon(1e-9));
  }
}

TEST_CASE("snapshots are frozen and digests track content") {
  CovarianceAccumulator acc(2, 1.0);
  const std::vector<double> e0 = {1, 0};
  auto s1 = acc.snapshot();
  acc.accumulate(e0, 1.0);
  auto s2 = acc.snapshot();
  CHECK(s1.inv_quadratic_form(e0) == doctest::Approx(1.0));
  CHECK(s2.inv_quadratic_form(e0) == doctest::Approx(0.5));
  CHECK(s1.digest() != s2.digest());
  CovarianceAccumulator copy = acc;
  CHECK(copy.snapshot().digest() == s2.digest());
}

TEST_CASE("scaled HF metric and potential trace") {
  std::vector<Eigen::VectorXd> diffs = {Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 2)};
  const auto m0 = scaled_hf_metric(0, diffs, 0.5);
  CHECK(m0.regularized_matrix()(0, 0) == doctest::Approx(0.5));
  CHECK(m0.regularized_matrix()(1, 1) == doctest::Approx(0.5));
  const auto m3 = scaled_hf_metric(3, diffs, 0.5);
  // (3/2) diag(1, 4) + 0.5 I.
  CHECK(m3.regularized_matrix()(0, 0) == doctest::Approx(2.0));
  CHECK(m3.regularized_matrix()(1, 1) == doctest::Approx(6.5));

  std::vector<PotentialPhaseInput> phases(2);
  phases[0].metric = &m0;
  phases[0].samples = {Eigen::Vector2d(1, 0)};
  phases[1].metric = &m3;
  phases[1].samples = {Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1)};
  const auto trace = elliptical_potential_trace(phases);
  REQUIRE(trace.size() == 2);
  CHECK(trace[0].mean_sq_norm == doctest::Approx(2.0));
  CHECK(trace[1].mean_sq_norm == doctest::Approx(0.5 * (0.5 + 1 / 6.5)));
  CHECK(trace[1].cumulative == doctest::Approx(2.0 + 0.5 * (0.5 + 1 / 6.5)));
}
