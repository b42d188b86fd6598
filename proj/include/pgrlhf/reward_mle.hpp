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

#ifndef PGRLHF_REWARD_MLE_HPP_
#define PGRLHF_REWARD_MLE_HPP_

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "pgrlhf/features.hpp"
#include "pgrlhf/preference.hpp"

namespace pgrlhf {

// Constrained Bradley-Terry MLE data: one feature difference per record
// (rows of `differences`), binary labels, and the radius of the feasible
// ball {||mu|| <= radius}.
class MleProblem {
 public:
  using RowMatrix =
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  // Throws std::invalid_argument when empty, mis-sized, labels outside
  // {0, 1}, or radius <= 0.
  MleProblem(RowMatrix differences, Eigen::VectorXd labels, double radius);

  static MleProblem from_records(const FeatureMap& features,
                                 std::span<const PreferenceRecord> records,
                                 double radius);

  int records() const { return static_cast<int>(differences_.rows()); }
  int dimension() const { return static_cast<int>(differences_.cols()); }
  double radius() const { return radius_; }
  const RowMatrix& differences() const { return differences_; }
  const Eigen::VectorXd& labels() const { return labels_; }

  // Mean over rows of ||diff_i||^2 / 4: a bound on the Hessian's largest
  // eigenvalue.
  double smoothness() const;

 private:
  RowMatrix differences_;
  Eigen::VectorXd labels_;
  double radius_;
};

// log(1 + exp(x)) without overflow.
double softplus(double x);

// Mean negative log-likelihood.
double nll(const MleProblem& problem, const Eigen::VectorXd& mu);
Eigen::VectorXd nll_gradient(const MleProblem& problem,
                             const Eigen::VectorXd& mu);

// Closest point of the ball {||x|| <= radius}.
Eigen::VectorXd project_ball(const Eigen::VectorXd& x, double radius);

struct MleOptions {
  double step = 0.0;  // 0 selects 1 / smoothness()
  int max_iters = 5000;
  double grad_tol = 1e-8;
};

struct MleSolution {
  Eigen::VectorXd mu;
  double nll = 0.0;
  int iterations = 0;
  // ||mu - P(mu - step * grad)|| / step at exit.
  double projected_gradient_norm = 0.0;
  // Upper bound on nll(mu) - min nll from convexity:
  // projected gradient norm times the ball diameter.
  double optimality_gap_bound = 0.0;
  bool converged = false;
};

// Projected gradient descent from mu = 0. Deterministic. Throws
// std::invalid_argument for step < 0 and std::runtime_error on a
// non-finite gradient.
MleSolution solve_mle(const MleProblem& problem, const MleOptions& options = {});

// sqrt((mu_hat - mu_star)^T (M + zeta I) (mu_hat - mu_star)) using the
// accumulator's matrix and ridge.
double mle_error_diagnostic(const Eigen::VectorXd& mu_hat,
                            const Eigen::VectorXd& mu_star,
                            const CovarianceAccumulator& sigma_hf);

// (2 + exp(-2x) + exp(2x))^{-1} with x = W_tau * W_mu.
double c_mle(double w_tau_times_w_mu);

// 8 sqrt((d + log(1/delta')) / (c_mle^2 M_HF) + zeta_hf W_mu^2 / n), n >= 1.
// Infinite when c == 0.
double epsilon_hf(int dimension, double delta_prime, double c, int m_hf,
                  double zeta_hf, double w_mu, int phase);

}  // namespace pgrlhf

#endif  // PGRLHF_REWARD_MLE_HPP_
