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

#ifndef PGRLHF_NEURAL_HPP_
#define PGRLHF_NEURAL_HPP_

#include <Eigen/Dense>
#include <memory>
#include <span>
#include <vector>

#include "json.hpp"
#include "pgrlhf/features.hpp"
#include "pgrlhf/optimizer.hpp"
#include "pgrlhf/policy.hpp"
#include "pgrlhf/preference.hpp"
#include "pgrlhf/reward_fn.hpp"
#include "pgrlhf/rng.hpp"
#include "pgrlhf/rollout.hpp"

namespace pgrlhf {

// f(phi; w) = (1/sqrt(m)) sum_l b_l relu(phi^T w_l), with w = [w_1; ...; w_m]
// trained inside the ball ||w - w0|| <= R and the signs b fixed.
class TwoLayerRelu {
 public:
  // Throws std::invalid_argument on size mismatches, nonpositive width or
  // radius, signs outside [-1, 1], init rows outside [c_lo, c_hi], or
  // params outside the ball.
  TwoLayerRelu(int width, int input_dim, double radius,
               std::vector<double> signs, Eigen::VectorXd init,
               Eigen::VectorXd params, double c_lo, double c_hi);

  // Signs uniform on {-1, +1}; each w0_l uniform on the unit sphere scaled
  // by Uniform[c_lo, c_hi]. params = w0.
  static TwoLayerRelu initialize(int width, int input_dim, double radius,
                                 Rng& rng, double c_lo = 0.5,
                                 double c_hi = 1.5);

  int width() const { return width_; }
  int input_dim() const { return input_dim_; }
  int parameter_count() const { return width_ * input_dim_; }
  double radius() const { return radius_; }
  double init_lo() const { return c_lo_; }
  double init_hi() const { return c_hi_; }
  const std::vector<double>& signs() const { return signs_; }
  const Eigen::VectorXd& init() const { return init_; }
  const Eigen::VectorXd& params() const { return params_; }

  // f at an arbitrary parameter vector `at` (same layout as params()).
  double value_at(std::span<const double> at, std::span<const double> phi) const;
  double value(std::span<const double> phi) const {
    return value_at({params_.data(), static_cast<std::size_t>(params_.size())},
                    phi);
  }
  // out += scale * psi_at(phi). psi is also the gradient of f in w at `at`.
  void accumulate_feature(std::span<const double> at,
                          std::span<const double> phi, double scale,
                          std::span<double> out) const;

  // Closest point of {||x - w0|| <= R}.
  Eigen::VectorXd project(const Eigen::VectorXd& x) const;

  // Same signs and init, new parameters (projected).
  TwoLayerRelu with_params(Eigen::VectorXd params) const;

  // Checkpoint: header (m, d, R, c_lo, c_hi, signs, init) and flat params.
  nlohmann::json to_json() const;
  static TwoLayerRelu from_json(const nlohmann::json& j);

 private:
  int width_;
  int input_dim_;
  double radius_;
  double c_lo_;
  double c_hi_;
  std::vector<double> signs_;
  Eigen::VectorXd init_;
  Eigen::VectorXd params_;
};

// psi_at(phi): block l is (b_l / sqrt(m)) 1{phi^T at_l > 0} phi.
Eigen::VectorXd relu_feature(const TwoLayerRelu& net,
                             std::span<const double> at,
                             std::span<const double> phi);

// sum over the trajectory of h(s, a; at).
double network_trajectory_sum(const TwoLayerRelu& net,
                              std::span<const double> at,
                              const FeatureMap& features,
                              const Trajectory& tau);

// Mean BT negative log-likelihood of the records under h(.; at).
double network_bt_loss(const TwoLayerRelu& net, std::span<const double> at,
                       const FeatureMap& features,
                       std::span<const PreferenceRecord> records);

// Projected SGD on the BT objective, starting at net.init(). Each step
// picks one record uniformly. Returns the iterate average.
Eigen::VectorXd train_reward_network(const TwoLayerRelu& net,
                                     const FeatureMap& features,
                                     std::span<const PreferenceRecord> records,
                                     double xi, int steps, Rng& rng);

struct NeuralQFit {
  Eigen::VectorXd theta;  // iterate average
  std::uint64_t trajectories = 0;
};

// Projected SGD on E_rho[(f(s,a;theta) - (Q_hat - b))^2] from net.init(),
// (s, a) from the cover and Q_hat a single Monte-Carlo rollout of `policy`
// under `reward` (which carries the bonus). Two trajectories per step.
NeuralQFit train_q_network(Simulator& sim, const Policy& policy,
                           std::span<const Policy> cover,
                           const RewardFn& reward, const FeatureMap& features,
                           const TwoLayerRelu& net, double xi, int steps,
                           Rng& rng);

// pi(a|s) proportional to exp(alpha f(s,a;w)). Since f is positively
// homogeneous in w, only the product alpha*w is stored.
class NeuralPolicy {
 public:
  // alpha = 1, w = net.init().
  NeuralPolicy(std::shared_ptr<const TwoLayerRelu> net,
               std::shared_ptr<const FeatureMap> features);
  NeuralPolicy(std::shared_ptr<const TwoLayerRelu> net,
               std::shared_ptr<const FeatureMap> features,
               Eigen::VectorXd alpha_w);

  const Eigen::VectorXd& alpha_w() const { return alpha_w_; }
  const std::shared_ptr<const ActionTable>& table_ptr() const {
    return table_;
  }
  Policy as_policy() const { return Policy(table_, Policy::Kind::kNeural); }

  // alpha w + eta theta.
  NeuralPolicy step(const Eigen::VectorXd& theta, double eta) const;

 private:
  std::shared_ptr<const TwoLayerRelu> net_;
  std::shared_ptr<const FeatureMap> features_;
  Eigen::VectorXd alpha_w_;
  std::shared_ptr<const ActionTable> table_;
};

// Running sum over pairs of c_p psi_p psi_p^T + zeta I with psi_p =
// psi_{w0}(s, a). Only S*A distinct features exist, so quadratic forms go
// through the pair Gram matrix instead of the (m d)^2 covariance.
class NeuralCoverage {
 public:
  NeuralCoverage(const TwoLayerRelu& net, const FeatureMap& features,
                 double zeta);

  void accumulate(int s, int a, double weight);
  // psi^T Sigma^{-1} psi for every pair, index s*A + a.
  std::vector<double> quadratic_forms() const;
  // Bonus partition frozen at the current weights.
  std::shared_ptr<const BonusPartition> partition(double beta,
                                                  double gamma) const;
  // Dense Sigma; only for small m*d (tests).
  Eigen::MatrixXd dense_matrix() const;

 private:
  int num_states_;
  int num_actions_;
  double zeta_;
  Eigen::MatrixXd psi_;   // pairs x (m d)
  Eigen::MatrixXd gram_;  // pairs x pairs
  std::vector<double> weights_;
};

struct NeuralConfig {
  int phases = 5;             // N
  int coverage_samples = 500; // K
  int hf_queries = 500;       // M_HF
  int iterations = 20;        // T
  int q_sgd_steps = 500;      // M^theta_SGD
  int reward_sgd_steps = 500; // M^mu_SGD
  int width = 64;
  double radius = 5.0;
  double init_lo = 0.5;
  double init_hi = 1.5;
  double eta = 0.3;
  double beta = 0.95;
  double gamma = 0.9;
  double zeta_cov = 1.0;
  double xi_theta = 0.01;
  double xi_mu = 0.01;
  std::size_t max_rollout_steps = kDefaultMaxSteps;

  void validate() const;
};

// NN-PG-RLHF. Reward only through `oracle`; same counters and accounting
// as run_pg_rlhf. `mle` in the phase records stays empty; mu_norm holds
// ||mu_hat - mu0||.
LearnerResult run_nn_pg_rlhf(const TabularMdp& dynamics,
                             std::shared_ptr<const FeatureMap> features,
                             PreferenceOracle& oracle, const Policy& baseline,
                             const NeuralConfig& cfg, Rng& rng,
                             const PhaseCallback& on_phase = {});

}  // namespace pgrlhf

#endif  // PGRLHF_NEURAL_HPP_
