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

#include "pgrlhf/optimizer.hpp"

#include <cmath>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "pgrlhf/kernels.hpp"

namespace pgrlhf {

double default_w_theta(double gamma) {
  const double h = 1.0 / (1.0 - gamma);
  return 2.0 * h * h - h;
}

double default_w_q(double gamma) {
  const double h = 1.0 / (1.0 - gamma);
  return 2.0 * h * h;
}

double default_w_a(double gamma) {
  const double h = 1.0 / (1.0 - gamma);
  return 4.0 * h * h;
}

double default_xi(double gamma, double w_theta, int horizon) {
  if (horizon <= 0) throw std::invalid_argument("default_xi: horizon <= 0");
  return w_theta / ((default_w_q(gamma) + w_theta) * std::sqrt(horizon));
}

NpgConfig NpgConfig::with_defaults(double gamma, int iterations, int sgd_steps,
                                   double eta, double beta,
                                   XiHorizon horizon) {
  NpgConfig c;
  c.iterations = iterations;
  c.sgd_steps = sgd_steps;
  c.eta = eta;
  c.beta = beta;
  c.gamma = gamma;
  c.w_theta = default_w_theta(gamma);
  c.xi = default_xi(gamma, c.w_theta,
                    horizon == XiHorizon::kIterations ? iterations : sgd_steps);
  return c;
}

void NpgConfig::validate() const {
  auto fail = [](const std::string& m) {
    throw std::invalid_argument("NpgConfig: " + m);
  };
  if (iterations <= 0) fail("T must be > 0");
  if (sgd_steps <= 0) fail("M_SGD must be > 0");
  if (!(eta > 0.0)) fail("eta must be > 0");
  if (!(xi > 0.0)) fail("xi must be > 0");
  if (!(w_theta > 0.0)) fail("W_theta must be > 0");
  if (!(beta > 0.0)) fail("beta must be > 0");
  if (!(gamma >= 0.0 && gamma < 1.0)) fail("gamma must lie in [0, 1)");
}

std::string NpgConfig::theory_warning() const {
  if (!theory_mode) return {};
  const double limit = 1.0 / default_w_a(gamma);
  if (eta <= limit) return {};
  std::ostringstream os;
  os << "eta = " << eta << " exceeds 1/W_A = " << limit;
  return os.str();
}

double monte_carlo_q(Simulator& sim, const Policy& policy, int s, int a,
                     const RewardFn& reward, Rng& rng) {
  const Trajectory tau = sim.rollout(policy, StartSpec::at(s, a), rng);
  double sum = 0.0;
  for (const auto& st : tau.steps) sum += reward(st.state, st.action);
  return sum;
}

QFit fit_q_linear(Simulator& sim, const Policy& policy,
                  std::span<const Policy> cover, const RewardFn& reward,
                  const FeatureMap& features, const NpgConfig& cfg, Rng& rng) {
  const int d = features.dimension();
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(d);
  const std::span<double> th(theta.data(), static_cast<std::size_t>(d));
  const std::span<double> acc(sum.data(), static_cast<std::size_t>(d));
  const double radius_sq = cfg.w_theta * cfg.w_theta;
  QFit out;
  for (int i = 0; i < cfg.sgd_steps; ++i) {
    const StateAction sa = sim.cover_sample(cover, rng);
    const double q_hat =
        monte_carlo_q(sim, policy, sa.state, sa.action, reward, rng);
    const double target = q_hat - reward.bonus(sa.state, sa.action);
    const auto phi = features.feature(sa.state, sa.action);
    const double residual = kernels::dot(phi, th) - target;
    kernels::axpy(-2.0 * cfg.xi * residual, phi, th);
    const double n2 = kernels::squared_norm(th);
    if (n2 > radius_sq) kernels::scale(cfg.w_theta / std::sqrt(n2), th);
    kernels::axpy(1.0, th, acc);
  }
  out.steps = cfg.sgd_steps;
  out.trajectories = 2ULL * static_cast<std::uint64_t>(cfg.sgd_steps);
  out.theta = sum / static_cast<double>(cfg.sgd_steps);
  return out;
}

NpgResult npg_update(Simulator& sim, std::span<const Policy> cover,
                     const CovarianceSnapshot& coverage,
                     const RewardFn& base_reward,
                     std::shared_ptr<const FeatureMap> features,
                     const NpgConfig& cfg, Rng& rng) {
  cfg.validate();
  auto partition =
      BonusPartition::linear(features, coverage, cfg.beta, cfg.gamma);
  const RewardFn reward = RewardFn::with_bonus(base_reward, partition);
  LogLinearPolicy inner = LogLinearPolicy::zero(features);
  std::vector<Policy> iterates;
  iterates.reserve(static_cast<std::size_t>(cfg.iterations));
  std::uint64_t trajectories = 0;
  double max_theta = 0.0;
  for (int t = 0; t < cfg.iterations; ++t) {
    const Policy current =
        PartitionedPolicy(partition, inner.table_ptr()).as_policy();
    iterates.push_back(current);
    const QFit fit =
        fit_q_linear(sim, current, cover, reward, *features, cfg, rng);
    trajectories += fit.trajectories;
    max_theta = std::max(max_theta, fit.theta.norm());
    inner = npg_step(inner, fit.theta, cfg.eta);
  }
  return NpgResult{Policy::mixture(std::move(iterates)), std::move(partition),
                   std::move(inner), trajectories, max_theta};
}

void OuterConfig::validate() const {
  auto fail = [](const std::string& m) {
    throw std::invalid_argument("OuterConfig: " + m);
  };
  if (phases <= 0) fail("N must be > 0");
  if (coverage_samples <= 0) fail("K must be > 0");
  if (hf_queries <= 0) fail("M_HF must be > 0");
  if (!(zeta_cov > 0.0)) fail("zeta_cov must be > 0");
  if (!(zeta_hf > 0.0)) fail("zeta_hf must be > 0");
  if (!(w_mu > 0.0)) fail("W_mu must be > 0");
  if (max_rollout_steps == 0) fail("max_rollout_steps must be > 0");
  npg.validate();
}

namespace {

int count_known_states(const BonusPartition& p, int* bonused_pairs) {
  int known = 0;
  int bonused = 0;
  for (int s = 0; s < p.num_states(); ++s) {
    const auto b = p.bonused_actions(s);
    if (b.empty()) ++known;
    bonused += static_cast<int>(b.size());
  }
  *bonused_pairs = bonused;
  return known;
}

enum class Mode { kPgRlhf, kPcPg };

LearnerResult drive(Mode mode, const TabularMdp& dynamics,
                    std::shared_ptr<const FeatureMap> features,
                    PreferenceOracle* oracle, const Policy* baseline,
                    const RewardFn* true_reward, const OuterConfig& cfg,
                    Rng& rng, const PhaseCallback& on_phase) {
  cfg.validate();
  if (!features) throw std::invalid_argument("driver: null feature map");
  if (features->num_states() != dynamics.num_states() ||
      features->num_actions() != dynamics.num_actions()) {
    throw std::invalid_argument("driver: feature map does not match MDP");
  }
  if (std::abs(cfg.npg.gamma - dynamics.gamma()) > 0.0) {
    throw std::invalid_argument("driver: NpgConfig gamma differs from MDP");
  }
  // The learner's copy of the environment carries no reward.
  const TabularMdp learner_env = dynamics.with_reward(
      std::vector<double>(static_cast<std::size_t>(dynamics.num_pairs()), 0.0));
  Simulator sim(learner_env, cfg.max_rollout_steps);
  CovarianceAccumulator coverage(features->dimension(), cfg.zeta_cov);

  std::vector<Policy> cover;
  cover.push_back(LogLinearPolicy::zero(features).as_policy());

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
      coverage.accumulate(features->feature(sa.state, sa.action), k_weight);
    }
    tally.coverage += static_cast<std::uint64_t>(cfg.coverage_samples);

    std::vector<Eigen::VectorXd> diffs;
    Eigen::VectorXd mu_hat;
    std::optional<RewardFn> base;
    if (mode == Mode::kPgRlhf) {
      const HfPhasePlan plan(n, cover, *baseline, cfg.hf_queries);
      const auto records = collect_phase_feedback(plan, sim, *oracle, rng);
      tally.feedback += 2ULL * static_cast<std::uint64_t>(cfg.hf_queries);
      diffs.reserve(records.size());
      for (const auto& r : records) {
        diffs.push_back(trajectory_feature_difference(*features, r.tau1, r.tau2));
      }
      const MleProblem problem =
          MleProblem::from_records(*features, records, cfg.w_mu);
      rec.mle = solve_mle(problem, cfg.mle);
      mu_hat = rec.mle.mu;
      rec.mu_norm = mu_hat.norm();
      base = RewardFn::linear(features, mu_hat);
    } else {
      base = *true_reward;
    }

    NpgResult upd = npg_update(sim, cover, coverage.snapshot(), *base, features,
                               cfg.npg, rng);
    tally.sgd += upd.trajectories;
    cover.push_back(upd.mixture);

    rec.counters = sim.counters();
    rec.tally = tally;
    rec.queries = oracle ? oracle->queries() : 0;
    rec.known_states = count_known_states(*upd.partition, &rec.bonused_pairs);
    rec.max_theta_norm = upd.max_theta_norm;
    rec.w_norm = upd.last_inner.parameters().norm();
    result.phases.push_back(rec);

    if (on_phase) {
      const PhaseView view{result.phases.back(),
                           cover.back(),
                           std::span<const Policy>(cover.data(), cover.size() - 1),
                           *upd.partition,
                           mode == Mode::kPgRlhf ? &diffs : nullptr,
                           mode == Mode::kPgRlhf ? &mu_hat : nullptr};
      on_phase(view);
    }
  }

  result.output = Policy::mixture(
      std::vector<Policy>(cover.begin() + 1, cover.end()));
  result.counters = sim.counters();
  result.tally = tally;
  result.queries = oracle ? oracle->queries() : 0;
  return result;
}

}  // namespace

LearnerResult run_pg_rlhf(const TabularMdp& dynamics,
                          std::shared_ptr<const FeatureMap> features,
                          PreferenceOracle& oracle, const Policy& baseline,
                          const OuterConfig& cfg, Rng& rng,
                          const PhaseCallback& on_phase) {
  return drive(Mode::kPgRlhf, dynamics, std::move(features), &oracle,
               &baseline, nullptr, cfg, rng, on_phase);
}

LearnerResult run_pc_pg(const TabularMdp& dynamics,
                        std::shared_ptr<const FeatureMap> features,
                        const RewardFn& reward, const OuterConfig& cfg,
                        Rng& rng, const PhaseCallback& on_phase) {
  return drive(Mode::kPcPg, dynamics, std::move(features), nullptr, nullptr,
               &reward, cfg, rng, on_phase);
}

}  // namespace pgrlhf
