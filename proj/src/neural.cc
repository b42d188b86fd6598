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

#include "pgrlhf/neural.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

#include "pgrlhf/kernels.hpp"
#include "pgrlhf/reward_mle.hpp"

namespace pgrlhf {
namespace {

std::span<const double> view(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}
std::span<double> view(Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

TwoLayerRelu::TwoLayerRelu(int width, int input_dim, double radius,
                           std::vector<double> signs, Eigen::VectorXd init,
                           Eigen::VectorXd params, double c_lo, double c_hi)
    : width_(width),
      input_dim_(input_dim),
      radius_(radius),
      c_lo_(c_lo),
      c_hi_(c_hi),
      signs_(std::move(signs)),
      init_(std::move(init)),
      params_(std::move(params)) {
  auto fail = [](const std::string& m) {
    throw std::invalid_argument("TwoLayerRelu: " + m);
  };
  if (width <= 0 || input_dim <= 0) fail("width and input dim must be > 0");
  if (!(radius > 0.0)) fail("radius must be > 0");
  if (!(c_lo > 0.0 && c_lo <= c_hi)) fail("need 0 < c_lo <= c_hi");
  const auto md = static_cast<Eigen::Index>(width) * input_dim;
  if (signs_.size() != static_cast<std::size_t>(width)) fail("sign count");
  if (init_.size() != md || params_.size() != md) fail("parameter size");
  for (double b : signs_) {
    if (!(b >= -1.0 && b <= 1.0)) fail("signs must lie in [-1, 1]");
  }
  for (int l = 0; l < width; ++l) {
    const double n = init_.segment(static_cast<Eigen::Index>(l) * input_dim,
                                   input_dim)
                         .norm();
    // Small slack for values that went through JSON.
    if (n < c_lo * (1 - 1e-12) || n > c_hi * (1 + 1e-12)) {
      fail("init row norm outside [c_lo, c_hi]");
    }
  }
  if ((params_ - init_).norm() > radius * (1 + 1e-12)) {
    fail("params outside the ball around init");
  }
}

TwoLayerRelu TwoLayerRelu::initialize(int width, int input_dim, double radius,
                                      Rng& rng, double c_lo, double c_hi) {
  if (width <= 0 || input_dim <= 0) {
    throw std::invalid_argument("TwoLayerRelu: width and input dim must be > 0");
  }
  if (!(c_lo > 0.0 && c_lo <= c_hi)) {
    throw std::invalid_argument("TwoLayerRelu: need 0 < c_lo <= c_hi");
  }
  std::vector<double> signs(static_cast<std::size_t>(width));
  for (double& b : signs) b = rng.bernoulli(0.5) ? 1.0 : -1.0;
  Eigen::VectorXd w0(static_cast<Eigen::Index>(width) * input_dim);
  for (int l = 0; l < width; ++l) {
    auto row = w0.segment(static_cast<Eigen::Index>(l) * input_dim, input_dim);
    double n = 0.0;
    do {
      for (int k = 0; k < input_dim; ++k) row(k) = rng.normal();
      n = row.norm();
    } while (n == 0.0);
    row *= (c_lo + (c_hi - c_lo) * rng.uniform()) / n;
  }
  Eigen::VectorXd params = w0;
  return TwoLayerRelu(width, input_dim, radius, std::move(signs), std::move(w0),
                      std::move(params), c_lo, c_hi);
}

double TwoLayerRelu::value_at(std::span<const double> at,
                              std::span<const double> phi) const {
  const auto d = static_cast<std::size_t>(input_dim_);
  double sum = 0.0;
  for (int l = 0; l < width_; ++l) {
    const double z = kernels::dot(phi, at.subspan(l * d, d));
    if (z > 0.0) sum += signs_[l] * z;
  }
  return sum / std::sqrt(static_cast<double>(width_));
}

void TwoLayerRelu::accumulate_feature(std::span<const double> at,
                                      std::span<const double> phi,
                                      double scale,
                                      std::span<double> out) const {
  const auto d = static_cast<std::size_t>(input_dim_);
  const double inv = scale / std::sqrt(static_cast<double>(width_));
  for (int l = 0; l < width_; ++l) {
    if (kernels::dot(phi, at.subspan(l * d, d)) > 0.0) {
      kernels::axpy(inv * signs_[l], phi, out.subspan(l * d, d));
    }
  }
}

Eigen::VectorXd TwoLayerRelu::project(const Eigen::VectorXd& x) const {
  return init_ + project_ball(x - init_, radius_);
}

TwoLayerRelu TwoLayerRelu::with_params(Eigen::VectorXd params) const {
  if (params.size() != init_.size()) {
    throw std::invalid_argument("TwoLayerRelu: parameter size");
  }
  return TwoLayerRelu(width_, input_dim_, radius_, signs_, init_,
                      project(params), c_lo_, c_hi_);
}

nlohmann::json TwoLayerRelu::to_json() const {
  nlohmann::json j;
  j["width"] = width_;
  j["input_dim"] = input_dim_;
  j["radius"] = radius_;
  j["init_lo"] = c_lo_;
  j["init_hi"] = c_hi_;
  j["signs"] = signs_;
  j["init"] = std::vector<double>(init_.data(), init_.data() + init_.size());
  j["params"] =
      std::vector<double>(params_.data(), params_.data() + params_.size());
  return j;
}

TwoLayerRelu TwoLayerRelu::from_json(const nlohmann::json& j) {
  auto vec = [](const nlohmann::json& a) {
    const auto v = a.get<std::vector<double>>();
    return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(
        v.data(), static_cast<Eigen::Index>(v.size())));
  };
  return TwoLayerRelu(j.at("width").get<int>(), j.at("input_dim").get<int>(),
                      j.at("radius").get<double>(),
                      j.at("signs").get<std::vector<double>>(),
                      vec(j.at("init")), vec(j.at("params")),
                      j.at("init_lo").get<double>(),
                      j.at("init_hi").get<double>());
}

Eigen::VectorXd relu_feature(const TwoLayerRelu& net,
                             std::span<const double> at,
                             std::span<const double> phi) {
  if (at.size() != static_cast<std::size_t>(net.parameter_count()) ||
      phi.size() != static_cast<std::size_t>(net.input_dim())) {
    throw std::invalid_argument("relu_feature: size mismatch");
  }
  Eigen::VectorXd psi = Eigen::VectorXd::Zero(net.parameter_count());
  net.accumulate_feature(at, phi, 1.0, view(psi));
  return psi;
}

double network_trajectory_sum(const TwoLayerRelu& net,
                              std::span<const double> at,
                              const FeatureMap& features,
                              const Trajectory& tau) {
  double sum = 0.0;
  for (const auto& st : tau.steps) {
    sum += net.value_at(at, features.feature(st.state, st.action));
  }
  return sum;
}

double network_bt_loss(const TwoLayerRelu& net, std::span<const double> at,
                       const FeatureMap& features,
                       std::span<const PreferenceRecord> records) {
  if (records.empty()) throw std::invalid_argument("network_bt_loss: no records");
  double sum = 0.0;
  for (const auto& r : records) {
    const double z = network_trajectory_sum(net, at, features, r.tau1) -
                     network_trajectory_sum(net, at, features, r.tau2);
    sum += r.y == 1 ? softplus(-z) : softplus(z);
  }
  return sum / static_cast<double>(records.size());
}

Eigen::VectorXd train_reward_network(const TwoLayerRelu& net,
                                     const FeatureMap& features,
                                     std::span<const PreferenceRecord> records,
                                     double xi, int steps, Rng& rng) {
  if (records.empty()) {
    throw std::invalid_argument("train_reward_network: no records");
  }
  if (!(xi > 0.0) || steps <= 0) {
    throw std::invalid_argument("train_reward_network: xi and steps must be > 0");
  }
  if (features.dimension() != net.input_dim()) {
    throw std::invalid_argument("train_reward_network: feature dimension");
  }
  Eigen::VectorXd mu = net.init();
  Eigen::VectorXd avg = Eigen::VectorXd::Zero(mu.size());
  Eigen::VectorXd z(mu.size());
  for (int j = 0; j < steps; ++j) {
    const auto& r = records[rng.index(records.size())];
    z.setZero();
    double diff = 0.0;
    for (const auto& st : r.tau1.steps) {
      const auto phi = features.feature(st.state, st.action);
      diff += net.value_at(view(mu), phi);
      net.accumulate_feature(view(mu), phi, 1.0, view(z));
    }
    for (const auto& st : r.tau2.steps) {
      const auto phi = features.feature(st.state, st.action);
      diff -= net.value_at(view(mu), phi);
      net.accumulate_feature(view(mu), phi, -1.0, view(z));
    }
    const double residual = bt_preference_probability(diff) - r.y;
    mu = net.project(mu - xi * residual * z);
    avg += mu;
  }
  return avg / static_cast<double>(steps);
}

NeuralQFit train_q_network(Simulator& sim, const Policy& policy,
                           std::span<const Policy> cover,
                           const RewardFn& reward, const FeatureMap& features,
                           const TwoLayerRelu& net, double xi, int steps,
                           Rng& rng) {
  if (!(xi > 0.0) || steps <= 0) {
    throw std::invalid_argument("train_q_network: xi and steps must be > 0");
  }
  if (features.dimension() != net.input_dim()) {
    throw std::invalid_argument("train_q_network: feature dimension");
  }
  Eigen::VectorXd theta = net.init();
  Eigen::VectorXd avg = Eigen::VectorXd::Zero(theta.size());
  Eigen::VectorXd gate(theta.size());
  for (int i = 0; i < steps; ++i) {
    const StateAction sa = sim.cover_sample(cover, rng);
    const double q_hat =
        monte_carlo_q(sim, policy, sa.state, sa.action, reward, rng);
    const double target = q_hat - reward.bonus(sa.state, sa.action);
    const auto phi = features.feature(sa.state, sa.action);
    const double residual = net.value_at(view(theta), phi) - target;
    // Gates are read at the pre-step theta.
    gate = theta;
    net.accumulate_feature(view(gate), phi, -2.0 * xi * residual, view(theta));
    theta = net.project(theta);
    avg += theta;
  }
  NeuralQFit out;
  out.theta = avg / static_cast<double>(steps);
  out.trajectories = 2ULL * static_cast<std::uint64_t>(steps);
  return out;
}

namespace {

std::shared_ptr<const ActionTable> neural_table(const TwoLayerRelu& net,
                                                const FeatureMap& features,
                                                const Eigen::VectorXd& u) {
  const int S = features.num_states();
  const int A = features.num_actions();
  std::vector<double> scores(static_cast<std::size_t>(S) * A);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      scores[static_cast<std::size_t>(s) * A + a] =
          net.value_at(view(u), features.feature(s, a));
    }
  }
  return std::make_shared<const ActionTable>(S, A,
                                             softmax_rows(scores, S, A));
}

}  // namespace

NeuralPolicy::NeuralPolicy(std::shared_ptr<const TwoLayerRelu> net,
                           std::shared_ptr<const FeatureMap> features)
    : NeuralPolicy(net, features, net ? net->init() : Eigen::VectorXd()) {}

NeuralPolicy::NeuralPolicy(std::shared_ptr<const TwoLayerRelu> net,
                           std::shared_ptr<const FeatureMap> features,
                           Eigen::VectorXd alpha_w)
    : net_(std::move(net)),
      features_(std::move(features)),
      alpha_w_(std::move(alpha_w)) {
  if (!net_ || !features_) throw std::invalid_argument("NeuralPolicy: null");
  if (alpha_w_.size() != net_->parameter_count() ||
      features_->dimension() != net_->input_dim()) {
    throw std::invalid_argument("NeuralPolicy: size mismatch");
  }
  table_ = neural_table(*net_, *features_, alpha_w_);
}

NeuralPolicy NeuralPolicy::step(const Eigen::VectorXd& theta,
                                double eta) const {
  if (theta.size() != alpha_w_.size()) {
    throw std::invalid_argument("NeuralPolicy::step: size mismatch");
  }
  return NeuralPolicy(net_, features_, alpha_w_ + eta * theta);
}

NeuralCoverage::NeuralCoverage(const TwoLayerRelu& net,
                               const FeatureMap& features, double zeta)
    : num_states_(features.num_states()),
      num_actions_(features.num_actions()),
      zeta_(zeta) {
  if (!(zeta > 0.0)) throw std::invalid_argument("NeuralCoverage: zeta <= 0");
  if (features.dimension() != net.input_dim()) {
    throw std::invalid_argument("NeuralCoverage: feature dimension");
  }
  const int pairs = num_states_ * num_actions_;
  psi_.resize(pairs, net.parameter_count());
  for (int s = 0; s < num_states_; ++s) {
    for (int a = 0; a < num_actions_; ++a) {
      psi_.row(s * num_actions_ + a) =
          relu_feature(net, view(net.init()), features.feature(s, a))
              .transpose();
    }
  }
  gram_ = psi_ * psi_.transpose();
  weights_.assign(static_cast<std::size_t>(pairs), 0.0);
}

void NeuralCoverage::accumulate(int s, int a, double weight) {
  if (s < 0 || s >= num_states_ || a < 0 || a >= num_actions_) {
    throw std::out_of_range("NeuralCoverage: pair out of range");
  }
  if (!(weight >= 0.0)) throw std::invalid_argument("NeuralCoverage: weight");
  weights_[static_cast<std::size_t>(s) * num_actions_ + a] += weight;
}

std::vector<double> NeuralCoverage::quadratic_forms() const {
  const int pairs = num_states_ * num_actions_;
  std::vector<int> active;
  for (int p = 0; p < pairs; ++p) {
    if (weights_[p] > 0.0) active.push_back(p);
  }
  std::vector<double> out(static_cast<std::size_t>(pairs));
  if (active.empty()) {
    for (int p = 0; p < pairs; ++p) out[p] = gram_(p, p) / zeta_;
    return out;
  }
  // Woodbury: Sigma^{-1} = (I - Psi_A (zeta C^{-1} + G_AA)^{-1} Psi_A^T) / zeta.
  const auto k = static_cast<Eigen::Index>(active.size());
  Eigen::MatrixXd h(k, k);
  Eigen::MatrixXd cross(k, pairs);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) h(i, j) = gram_(active[i], active[j]);
    h(i, i) += zeta_ / weights_[active[i]];
    cross.row(i) = gram_.row(active[i]);
  }
  const Eigen::MatrixXd solved = h.ldlt().solve(cross);
  for (int p = 0; p < pairs; ++p) {
    const double q = gram_(p, p) - cross.col(p).dot(solved.col(p));
    out[p] = std::max(0.0, q) / zeta_;
  }
  return out;
}

std::shared_ptr<const BonusPartition> NeuralCoverage::partition(
    double beta, double gamma) const {
  auto forms = std::make_shared<const std::vector<double>>(quadratic_forms());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  h = fnv1a(weights_.data(), weights_.size() * sizeof(double), h);
  h = fnv1a(&zeta_, sizeof(zeta_), h);
  const int A = num_actions_;
  auto form = [forms, A](int s, int a) {
    return (*forms)[static_cast<std::size_t>(s) * A + a];
  };
  return std::make_shared<const BonusPartition>(num_states_, num_actions_,
                                                std::move(form), beta, gamma, h);
}

Eigen::MatrixXd NeuralCoverage::dense_matrix() const {
  Eigen::MatrixXd m = zeta_ * Eigen::MatrixXd::Identity(psi_.cols(), psi_.cols());
  for (Eigen::Index p = 0; p < psi_.rows(); ++p) {
    if (weights_[p] > 0.0) {
      m.noalias() += weights_[p] * psi_.row(p).transpose() * psi_.row(p);
    }
  }
  return m;
}

void NeuralConfig::validate() const {
  auto fail = [](const std::string& m) {
    throw std::invalid_argument("NeuralConfig: " + m);
  };
  if (phases <= 0 || coverage_samples <= 0 || hf_queries <= 0 ||
      iterations <= 0 || q_sgd_steps <= 0 || reward_sgd_steps <= 0) {
    fail("budgets must be > 0");
  }
  if (width <= 0) fail("width must be > 0");
  if (!(radius > 0.0)) fail("radius must be > 0");
  if (!(init_lo > 0.0 && init_lo <= init_hi)) fail("need 0 < c_lo <= c_hi");
  if (!(eta > 0.0) || !(beta > 0.0)) fail("eta and beta must be > 0");
  if (!(gamma >= 0.0 && gamma < 1.0)) fail("gamma must lie in [0, 1)");
  if (!(zeta_cov > 0.0)) fail("zeta_cov must be > 0");
  if (!(xi_theta > 0.0) || !(xi_mu > 0.0)) fail("SGD steps must be > 0");
  if (max_rollout_steps == 0) fail("max_rollout_steps must be > 0");
}

LearnerResult run_nn_pg_rlhf(const TabularMdp& dynamics,
                             std::shared_ptr<const FeatureMap> features,
                             PreferenceOracle& oracle, const Policy& baseline,
                             const NeuralConfig& cfg, Rng& rng,
                             const PhaseCallback& on_phase) {
  cfg.validate();
  if (!features) throw std::invalid_argument("run_nn_pg_rlhf: null features");
  if (features->num_states() != dynamics.num_states() ||
      features->num_actions() != dynamics.num_actions()) {
    throw std::invalid_argument("run_nn_pg_rlhf: feature map does not match MDP");
  }
  if (cfg.gamma != dynamics.gamma()) {
    throw std::invalid_argument("run_nn_pg_rlhf: gamma differs from MDP");
  }
  const TabularMdp learner_env = dynamics.with_reward(
      std::vector<double>(static_cast<std::size_t>(dynamics.num_pairs()), 0.0));
  Simulator sim(learner_env, cfg.max_rollout_steps);

  const int d = features->dimension();
  // Policy/Q network (w0, b) and reward network (mu0, b').
  auto policy_net = std::make_shared<const TwoLayerRelu>(TwoLayerRelu::initialize(
      cfg.width, d, cfg.radius, rng, cfg.init_lo, cfg.init_hi));
  const TwoLayerRelu reward_net = TwoLayerRelu::initialize(
      cfg.width, d, cfg.radius, rng, cfg.init_lo, cfg.init_hi);
  NeuralCoverage coverage(*policy_net, *features, cfg.zeta_cov);

  std::vector<Policy> cover;
  cover.push_back(NeuralPolicy(policy_net, features).as_policy());

  LearnerResult result{Policy::uniform(dynamics.num_states(),
                                       dynamics.num_actions()),
                       {}, {}, {}, 0};
  OpTally tally;
  const double k_weight = 1.0 / cfg.coverage_samples;

  for (int n = 0; n < cfg.phases; ++n) {
    LearnerPhase rec;
    rec.phase = n;
    for (int k = 0; k < cfg.coverage_samples; ++k) {
      const StateAction sa = sim.occupancy_sample(cover[n], rng);
      coverage.accumulate(sa.state, sa.action, k_weight);
    }
    tally.coverage += static_cast<std::uint64_t>(cfg.coverage_samples);

    const HfPhasePlan plan(n, cover, baseline, cfg.hf_queries);
    const auto records = collect_phase_feedback(plan, sim, oracle, rng);
    tally.feedback += 2ULL * static_cast<std::uint64_t>(cfg.hf_queries);
    const Eigen::VectorXd mu_hat = train_reward_network(
        reward_net, *features, records, cfg.xi_mu, cfg.reward_sgd_steps, rng);
    rec.mu_norm = (mu_hat - reward_net.init()).norm();
    const auto r_net = std::make_shared<const TwoLayerRelu>(
        reward_net.with_params(mu_hat));
    const RewardFn r_hat = RewardFn::neural(
        dynamics.num_states(), dynamics.num_actions(),
        [r_net, features](int s, int a) {
          return r_net->value(features->feature(s, a));
        });

    auto partition = coverage.partition(cfg.beta, cfg.gamma);
    const RewardFn reward = RewardFn::with_bonus(r_hat, partition);
    NeuralPolicy inner(policy_net, features);
    std::vector<Policy> iterates;
    iterates.reserve(static_cast<std::size_t>(cfg.iterations));
    for (int t = 0; t < cfg.iterations; ++t) {
      const Policy current =
          PartitionedPolicy(partition, inner.table_ptr(), Policy::Kind::kNeural)
              .as_policy();
      iterates.push_back(current);
      const NeuralQFit fit =
          train_q_network(sim, current, cover, reward, *features, *policy_net,
                          cfg.xi_theta, cfg.q_sgd_steps, rng);
      tally.sgd += fit.trajectories;
      rec.max_theta_norm = std::max(rec.max_theta_norm, fit.theta.norm());
      inner = inner.step(fit.theta, cfg.eta);
    }
    cover.push_back(Policy::mixture(std::move(iterates)));

    rec.counters = sim.counters();
    rec.tally = tally;
    rec.queries = oracle.queries();
    int bonused = 0;
    int known = 0;
    for (int s = 0; s < dynamics.num_states(); ++s) {
      const auto b = partition->bonused_actions(s);
      if (b.empty()) ++known;
      bonused += static_cast<int>(b.size());
    }
    rec.known_states = known;
    rec.bonused_pairs = bonused;
    rec.w_norm = inner.alpha_w().norm();
    result.phases.push_back(rec);

    if (on_phase) {
      const PhaseView view{result.phases.back(), cover.back(),
                           std::span<const Policy>(cover.data(), cover.size() - 1),
                           *partition, nullptr, nullptr};
      on_phase(view);
    }
  }

  result.output =
      Policy::mixture(std::vector<Policy>(cover.begin() + 1, cover.end()));
  result.counters = sim.counters();
  result.tally = tally;
  result.queries = oracle.queries();
  return result;
}

}  // namespace pgrlhf
