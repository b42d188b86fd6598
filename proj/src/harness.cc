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

#include "pgrlhf/harness.hpp"

#include <algorithm>
#include <cstdio>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include "pgrlhf/evaluation.hpp"
#include "pgrlhf/features.hpp"
#include "pgrlhf/neural.hpp"
#include "pgrlhf/optimizer.hpp"
#include "pgrlhf/preference.hpp"
#include "pgrlhf/reward_fn.hpp"
#include "pgrlhf/reward_mle.hpp"
#include "pgrlhf/reward_oracle.hpp"
#include "pgrlhf/rng.hpp"
#include "pgrlhf/rollout.hpp"

namespace pgrlhf {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

std::string algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::kPgRlhf:
      return "pg_rlhf";
    case Algorithm::kPcPg:
      return "pc_pg";
    case Algorithm::kNnPgRlhf:
      return "nn_pg_rlhf";
  }
  return "unknown";
}

Algorithm parse_algorithm(const std::string& name) {
  if (name == "pg_rlhf") return Algorithm::kPgRlhf;
  if (name == "pc_pg") return Algorithm::kPcPg;
  if (name == "nn_pg_rlhf") return Algorithm::kNnPgRlhf;
  throw ConfigError("unknown algorithm '" + name +
                    "' (expected pg_rlhf, pc_pg or nn_pg_rlhf)");
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("config: " + m); };
  if (mdp_path.empty() && lock_horizon <= 0) fail("lock_horizon must be > 0");
  if (phases <= 0 || iterations <= 0 || coverage_samples <= 0 ||
      sgd_steps <= 0 || hf_queries <= 0) {
    fail("all budgets (N, T, K, M_SGD, M_HF) must be > 0");
  }
  if (!(gamma > 0.0 && gamma < 1.0)) fail("gamma must lie in (0, 1)");
  if (!(eta > 0.0)) fail("eta must be > 0");
  if (!(beta > 0.0)) fail("beta must be > 0");
  if (!(delta > 0.0 && delta < 1.0)) fail("delta must lie in (0, 1)");
  if (!(zeta_cov > 0.0)) fail("zeta_cov must be > 0");
  if (!(zeta_hf >= 0.0)) fail("zeta_hf must be >= 0 (0 selects the default)");
  if (!(w_mu >= 0.0)) fail("w_mu must be >= 0 (0 selects the default)");
  if (!(xi >= 0.0)) fail("xi must be >= 0 (0 selects the default)");
  if (xi_horizon != "iterations" && xi_horizon != "sgd") {
    fail("xi_horizon must be 'iterations' or 'sgd'");
  }
  if (mle_max_iters < 0) fail("mle_max_iters must be >= 0");
  if (!(mle_grad_tol > 0.0)) fail("mle_grad_tol must be > 0");
  if (width <= 0 || !(radius > 0.0)) fail("width and radius must be > 0");
  if (!(xi_theta > 0.0) || !(xi_mu > 0.0)) fail("xi_theta and xi_mu must be > 0");
  if (potential_samples <= 0) fail("potential_samples must be > 0");
  if (replications <= 0) fail("replications must be > 0");
  if (threads < 0) fail("threads must be >= 0");
  if (!(theory_epsilon > 0.0) || !(c_base > 0.0)) {
    fail("theory_epsilon and c_base must be > 0");
  }
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j;
  j["lock_horizon"] = lock_horizon;
  j["mdp_path"] = mdp_path;
  j["algorithm"] = algorithm_name(algorithm);
  j["phases"] = phases;
  j["iterations"] = iterations;
  j["coverage_samples"] = coverage_samples;
  j["sgd_steps"] = sgd_steps;
  j["hf_queries"] = hf_queries;
  j["eta"] = eta;
  j["beta"] = beta;
  j["gamma"] = gamma;
  j["delta"] = delta;
  j["zeta_cov"] = zeta_cov;
  j["zeta_hf"] = zeta_hf;
  j["w_mu"] = w_mu;
  j["xi"] = xi;
  j["xi_horizon"] = xi_horizon;
  j["mle_max_iters"] = mle_max_iters;
  j["mle_grad_tol"] = mle_grad_tol;
  j["width"] = width;
  j["radius"] = radius;
  j["xi_theta"] = xi_theta;
  j["xi_mu"] = xi_mu;
  j["potential_samples"] = potential_samples;
  j["replications"] = replications;
  j["base_seed"] = base_seed;
  j["threads"] = threads;
  j["output_dir"] = output_dir;
  j["svg"] = svg;
  j["theory_mode"] = theory_mode;
  j["theory_epsilon"] = theory_epsilon;
  j["c_base"] = c_base;
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config JSON must be an object");
  ExperimentConfig c;
  const nlohmann::json defaults = c.to_json();
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!defaults.contains(it.key())) {
      throw ConfigError("config JSON: unknown key '" + it.key() + "'");
    }
  }
  try {
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) j.at(key).get_to(field);
    };
    get("lock_horizon", c.lock_horizon);
    get("mdp_path", c.mdp_path);
    if (j.contains("algorithm")) {
      c.algorithm = parse_algorithm(j.at("algorithm").get<std::string>());
    }
    get("phases", c.phases);
    get("iterations", c.iterations);
    get("coverage_samples", c.coverage_samples);
    get("sgd_steps", c.sgd_steps);
    get("hf_queries", c.hf_queries);
    get("eta", c.eta);
    get("beta", c.beta);
    get("gamma", c.gamma);
    get("delta", c.delta);
    get("zeta_cov", c.zeta_cov);
    get("zeta_hf", c.zeta_hf);
    get("w_mu", c.w_mu);
    get("xi", c.xi);
    get("xi_horizon", c.xi_horizon);
    get("mle_max_iters", c.mle_max_iters);
    get("mle_grad_tol", c.mle_grad_tol);
    get("width", c.width);
    get("radius", c.radius);
    get("xi_theta", c.xi_theta);
    get("xi_mu", c.xi_mu);
    get("potential_samples", c.potential_samples);
    get("replications", c.replications);
    get("base_seed", c.base_seed);
    get("threads", c.threads);
    get("output_dir", c.output_dir);
    get("svg", c.svg);
    get("theory_mode", c.theory_mode);
    get("theory_epsilon", c.theory_epsilon);
    get("c_base", c.c_base);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config JSON: ") + e.what());
  }
  return c;
}

double delta_prime(double delta, int phases, int coverage_samples,
                   int iterations, int hf_queries, int sgd_steps) {
  const double denom = 12.0 * phases *
                       (static_cast<double>(coverage_samples) + 1.0 + iterations) *
                       static_cast<double>(hf_queries) * sgd_steps;
  return delta / denom;
}

double trajectory_length_bound(double delta_prime, double gamma) {
  return std::log(1.0 / delta_prime) / (1.0 - gamma);
}

double theory_beta(double gamma, double epsilon, double c_base, double w_q,
                   double w_mu, double zeta_hf, int dimension) {
  if (!(gamma > 0.0 && gamma < 1.0) || !(epsilon > 0.0) || !(c_base > 0.0) ||
      !(w_q > 0.0) || !(w_mu > 0.0) || !(zeta_hf > 0.0) || dimension <= 0) {
    return kNaN;
  }
  const double g = 1.0 - gamma;
  const double d = dimension;
  const double num = std::pow(g, 5) * std::pow(epsilon, 5) * c_base;
  const double den = 5000.0 * std::pow(6.0, 5) * std::pow(2.0, 4) *
                     std::pow(256.0, 4) * w_q * w_q * w_mu * w_mu * zeta_hf *
                     d * d;
  const double arg = 800.0 * 256.0 * 256.0 * d * d * d * w_q * w_mu *
                     std::sqrt(10.0 * zeta_hf) /
                     (std::pow(g, 4.5) * std::sqrt(c_base));
  const double l = std::log(arg);
  return num / den / (l * l);
}

nlohmann::json DerivedConstants::to_json() const {
  nlohmann::json j;
  j["delta_prime"] = delta_prime;
  j["w_tau"] = w_tau;
  j["zeta_hf"] = zeta_hf;
  j["reward_norm"] = reward_norm;
  j["w_mu"] = w_mu;
  j["w_mu_overridden"] = w_mu_overridden;
  j["c_mle"] = c_mle;
  j["w_theta"] = w_theta;
  j["w_q"] = w_q;
  j["w_a"] = w_a;
  j["xi"] = xi;
  j["theory_beta"] = theory_beta;
  j["eta_warning"] = eta_warning;
  j["dimension"] = dimension;
  return j;
}

TabularMdp load_environment(const ExperimentConfig& cfg) {
  if (cfg.mdp_path.empty()) {
    try {
      return build_bidirectional_lock(cfg.lock_horizon, cfg.gamma);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  std::ifstream in(cfg.mdp_path);
  if (!in) throw ConfigError("cannot open MDP file '" + cfg.mdp_path + "'");
  try {
    const auto j = nlohmann::json::parse(in);
    TabularMdp mdp = TabularMdp::from_json(j);
    if (mdp.gamma() != cfg.gamma) {
      throw ConfigError("MDP file gamma differs from config gamma");
    }
    return mdp;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("MDP file '" + cfg.mdp_path + "': " + e.what());
  }
}

DerivedConstants derive_constants(const ExperimentConfig& cfg,
                                  const TabularMdp& mdp) {
  DerivedConstants c;
  c.dimension = mdp.num_pairs();  // one-hot features
  c.delta_prime = delta_prime(cfg.delta, cfg.phases, cfg.coverage_samples,
                              cfg.iterations, cfg.hf_queries, cfg.sgd_steps);
  c.w_tau = trajectory_length_bound(c.delta_prime, cfg.gamma);
  c.zeta_hf = cfg.zeta_hf > 0.0 ? cfg.zeta_hf : 4.0 * c.w_tau * c.w_tau;
  double sq = 0.0;
  for (double r : mdp.rewards()) sq += r * r;
  c.reward_norm = std::sqrt(sq);
  if (cfg.w_mu > 0.0) {
    c.w_mu = cfg.w_mu;
  } else {
    c.w_mu = std::max(1.0, c.reward_norm);
    c.w_mu_overridden = c.reward_norm > 1.0;
  }
  c.c_mle = c_mle(c.w_tau * c.w_mu);
  c.w_theta = default_w_theta(cfg.gamma);
  c.w_q = default_w_q(cfg.gamma);
  c.w_a = default_w_a(cfg.gamma);
  c.xi = cfg.xi > 0.0 ? cfg.xi
                      : default_xi(cfg.gamma, c.w_theta,
                                   cfg.xi_horizon == "sgd" ? cfg.sgd_steps
                                                           : cfg.iterations);
  c.theory_beta = cfg.theory_mode
                      ? theory_beta(cfg.gamma, cfg.theory_epsilon, cfg.c_base,
                                    c.w_q, c.w_mu, c.zeta_hf, c.dimension)
                      : kNaN;
  if (cfg.theory_mode && cfg.eta > 1.0 / c.w_a) {
    c.eta_warning = "eta = " + std::to_string(cfg.eta) + " exceeds 1/W_A = " +
                    std::to_string(1.0 / c.w_a);
  }
  return c;
}

std::uint64_t formula_trajectories(Algorithm a, int phases,
                                   int coverage_samples, int hf_queries,
                                   int iterations, int sgd_steps) {
  const std::uint64_t hf =
      a == Algorithm::kPcPg ? 0ULL : 2ULL * static_cast<std::uint64_t>(hf_queries);
  return (static_cast<std::uint64_t>(coverage_samples) + hf +
          2ULL * static_cast<std::uint64_t>(iterations) *
              static_cast<std::uint64_t>(sgd_steps)) *
         static_cast<std::uint64_t>(phases);
}

double RunReport::final_suboptimality() const {
  return phases.empty() ? kNaN : phases.back().suboptimality;
}

double RunReport::query_sample_ratio() const {
  return trajectories == 0 ? kNaN
                           : static_cast<double>(queries) /
                                 static_cast<double>(trajectories);
}

nlohmann::json RunReport::to_json() const {
  nlohmann::json j;
  j["algorithm"] = algorithm_name(algorithm);
  j["replication"] = replication;
  j["seed"] = seed;
  j["v_star"] = v_star;
  j["output_value"] = output_value;
  j["output_suboptimality"] = output_suboptimality;
  j["final_suboptimality"] = final_suboptimality();
  j["trajectories"] = trajectories;
  j["formula_trajectories"] = formula_trajectories;
  j["transitions"] = transitions;
  j["truncated"] = truncated;
  j["queries"] = queries;
  j["true_reward_observations"] = true_reward_observations;
  j["true_reward_reads"] = true_reward_reads;
  j["query_sample_ratio"] = query_sample_ratio();
  nlohmann::json curve = nlohmann::json::array();
  for (const auto& p : phases) curve.push_back(p.suboptimality);
  j["suboptimality_by_phase"] = curve;
  return j;
}

namespace {

double checked_suboptimality(double v_star, double v) {
  // Exact values; anything above V* beyond round-off is a bug.
  if (v > v_star + 1e-9 * std::max(1.0, std::abs(v_star))) {
    throw std::runtime_error("policy value exceeds V*: evaluation bug");
  }
  return std::max(0.0, normalized_suboptimality(v_star, v));
}

}  // namespace

RunReport run_single(const ExperimentConfig& cfg, const TabularMdp& mdp,
                     int replication) {
  cfg.validate();
  const DerivedConstants k = derive_constants(cfg, mdp);
  RunReport rep;
  rep.algorithm = cfg.algorithm;
  rep.replication = replication;
  rep.seed = cfg.base_seed + static_cast<std::uint64_t>(replication);
  Rng rng = seeded_rng(rep.seed, 0);
  Rng potential_rng = seeded_rng(rep.seed, 1);

  const int S = mdp.num_states();
  const int A = mdp.num_actions();
  const int init = mdp.initial_state();
  auto features = std::make_shared<const FeatureMap>(one_hot_features(mdp));
  auto handle = std::make_shared<RewardOracleHandle>(
      S, A, std::vector<double>(mdp.rewards().begin(), mdp.rewards().end()));
  const Eigen::VectorXd mu_star = Eigen::Map<const Eigen::VectorXd>(
      mdp.rewards().data(), static_cast<Eigen::Index>(mdp.rewards().size()));

  rep.v_star = value_iteration(mdp).values(init);
  if (!(rep.v_star > 0.0)) {
    throw std::runtime_error("V*(s_init) must be positive for normalization");
  }

  // Safety cap of 50 W_tau steps per rollout; hits are counted.
  const auto rollout_cap =
      static_cast<std::size_t>(std::ceil(50.0 * k.w_tau));
  // Diagnostics only: an uncounted simulator on the true MDP.
  Simulator probe(mdp, rollout_cap);
  double potential_sum = 0.0;

  auto on_phase = [&](const PhaseView& v) {
    PhaseRow row;
    const int n = v.record.phase;
    row.phase = n;
    row.value = exact_policy_value(mdp, v.next_policy)(init);
    row.suboptimality = checked_suboptimality(rep.v_star, row.value);
    row.trajectories = v.record.counters.trajectories;
    row.transitions = v.record.counters.transitions;
    row.truncated = v.record.counters.truncated;
    row.formula_trajectories =
        formula_trajectories(cfg.algorithm, n + 1, cfg.coverage_samples,
                             cfg.hf_queries, cfg.iterations, cfg.sgd_steps);
    row.queries = v.record.queries;
    row.true_reward_reads = handle->direct_reads();
    row.known_states = v.record.known_states;
    row.bonused_pairs = v.record.bonused_pairs;
    row.max_theta_norm = v.record.max_theta_norm;
    row.mle_nll = v.record.mle.nll;
    row.mle_iterations = v.record.mle.iterations;
    row.mle_pg_norm = v.record.mle.projected_gradient_norm;
    row.mle_error = kNaN;
    row.epsilon_hf = kNaN;
    row.potential_mean = kNaN;
    row.potential_cumulative = kNaN;
    if (v.hf_differences != nullptr && !v.hf_differences->empty()) {
      const auto& diffs = *v.hf_differences;
      const int scale = std::max(n, 1);
      CovarianceAccumulator sigma(k.dimension, k.zeta_hf / scale);
      const double w = 1.0 / static_cast<double>(diffs.size());
      for (const auto& d : diffs) {
        if (d.squaredNorm() > 0.0) sigma.accumulate(d, w);
      }
      row.mle_error = mle_error_diagnostic(*v.mu_hat, mu_star, sigma);
      row.epsilon_hf = epsilon_hf(k.dimension, k.delta_prime, k.c_mle,
                                  cfg.hf_queries, k.zeta_hf, k.w_mu, scale);

      const CovarianceAccumulator metric = scaled_hf_metric(n, diffs, k.zeta_hf);
      double sum = 0.0;
      for (int i = 0; i < cfg.potential_samples; ++i) {
        const Trajectory tau =
            probe.rollout(v.next_policy, StartSpec::initial(), potential_rng);
        sum += metric.inv_quadratic_form(trajectory_feature_sum(*features, tau));
      }
      row.potential_mean = sum / cfg.potential_samples;
      potential_sum += row.potential_mean;
      row.potential_cumulative = potential_sum;
    }
    rep.phases.push_back(row);
  };

  LearnerResult result{Policy::uniform(S, A), {}, {}, {}, 0};
  if (cfg.algorithm == Algorithm::kNnPgRlhf) {
    handle->set_poisoned(true);
    PreferenceOracle oracle(handle);
    NeuralConfig nc;
    nc.phases = cfg.phases;
    nc.coverage_samples = cfg.coverage_samples;
    nc.hf_queries = cfg.hf_queries;
    nc.iterations = cfg.iterations;
    nc.q_sgd_steps = cfg.sgd_steps;
    nc.reward_sgd_steps = cfg.sgd_steps;
    nc.width = cfg.width;
    nc.radius = cfg.radius;
    nc.eta = cfg.eta;
    nc.beta = cfg.beta;
    nc.gamma = cfg.gamma;
    nc.zeta_cov = cfg.zeta_cov;
    nc.xi_theta = cfg.xi_theta;
    nc.xi_mu = cfg.xi_mu;
    nc.max_rollout_steps = rollout_cap;
    result = run_nn_pg_rlhf(mdp, features, oracle, default_baseline_policy(mdp),
                            nc, rng, on_phase);
  } else {
    OuterConfig oc;
    oc.phases = cfg.phases;
    oc.coverage_samples = cfg.coverage_samples;
    oc.hf_queries = cfg.hf_queries;
    oc.zeta_cov = cfg.zeta_cov;
    oc.zeta_hf = k.zeta_hf;
    oc.w_mu = k.w_mu;
    oc.mle.max_iters = cfg.mle_max_iters;
    oc.mle.grad_tol = cfg.mle_grad_tol;
    oc.npg = NpgConfig::with_defaults(cfg.gamma, cfg.iterations, cfg.sgd_steps,
                                      cfg.eta, cfg.beta);
    oc.npg.xi = k.xi;
    oc.npg.theory_mode = cfg.theory_mode;
    oc.max_rollout_steps = rollout_cap;
    if (cfg.algorithm == Algorithm::kPgRlhf) {
      handle->set_poisoned(true);
      PreferenceOracle oracle(handle);
      result = run_pg_rlhf(mdp, features, oracle, default_baseline_policy(mdp),
                           oc, rng, on_phase);
    } else {
      result = run_pc_pg(mdp, features, RewardFn::observed(handle), oc, rng,
                         on_phase);
    }
  }

  rep.output_value = exact_policy_value(mdp, result.output)(init);
  rep.output_suboptimality = checked_suboptimality(rep.v_star, rep.output_value);
  rep.trajectories = result.counters.trajectories;
  rep.transitions = result.counters.transitions;
  rep.truncated = result.counters.truncated;
  rep.formula_trajectories =
      formula_trajectories(cfg.algorithm, cfg.phases, cfg.coverage_samples,
                           cfg.hf_queries, cfg.iterations, cfg.sgd_steps);
  rep.queries = result.queries;
  rep.true_reward_reads = handle->direct_reads();
  rep.true_reward_observations =
      cfg.algorithm == Algorithm::kPcPg ? rep.transitions : 0;
  return rep;
}

Interval mean_ci95(const std::vector<double>& xs) {
  Interval out;
  if (xs.empty()) return {kNaN, kNaN, kNaN};
  double sum = 0.0;
  for (double x : xs) sum += x;
  out.mean = sum / static_cast<double>(xs.size());
  double half = 0.0;
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    const double sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    half = 1.959963984540054 * sd / std::sqrt(static_cast<double>(xs.size()));
  }
  out.low = out.mean - half;
  out.high = out.mean + half;
  return out;
}

nlohmann::json ExperimentSummary::to_json() const {
  auto interval = [](const Interval& i) {
    return nlohmann::json{{"mean", i.mean}, {"ci_low", i.low}, {"ci_high", i.high}};
  };
  nlohmann::json j;
  j["csv_schema_version"] = kCsvSchemaVersion;
  j["config"] = config.to_json();
  j["constants"] = constants.to_json();
  j["final_phase_suboptimality"] = interval(final_phase);
  j["output_suboptimality"] = interval(output);
  nlohmann::json pp = nlohmann::json::array();
  for (std::size_t n = 0; n < per_phase.size(); ++n) {
    nlohmann::json e = interval(per_phase[n]);
    e["phase"] = n;
    pp.push_back(e);
  }
  j["per_phase"] = pp;
  nlohmann::json runs_j = nlohmann::json::array();
  for (const auto& r : runs) runs_j.push_back(r.to_json());
  j["runs"] = runs_j;
  return j;
}

ExperimentSummary run_experiment(const ExperimentConfig& cfg,
                                 std::ostream* log) {
  cfg.validate();
  const TabularMdp mdp = load_environment(cfg);
  ExperimentSummary s;
  s.config = cfg;
  s.constants = derive_constants(cfg, mdp);
  std::mutex log_mu;
  auto say = [&](const std::string& m) {
    if (log == nullptr) return;
    std::lock_guard<std::mutex> lock(log_mu);
    *log << m << '\n';
  };
  if (s.constants.w_mu_overridden) {
    say("W_mu overridden to max(1, ||r||_2) = " +
        std::to_string(s.constants.w_mu) + " for realizability");
  }
  if (cfg.theory_mode) {
    say("theory beta = " + std::to_string(s.constants.theory_beta) +
        ", configured beta = " + std::to_string(cfg.beta));
    if (!s.constants.eta_warning.empty()) say("warning: " + s.constants.eta_warning);
  }

  const int reps = cfg.replications;
  std::vector<std::optional<RunReport>> slots(static_cast<std::size_t>(reps));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(reps));
  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  int workers = cfg.threads > 0
                    ? cfg.threads
                    : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  workers = std::min(workers, reps);
  auto work = [&]() {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= reps || failed.load()) return;
      try {
        slots[i] = run_single(cfg, mdp, i);
        say("replication " + std::to_string(i) + " done: final " +
            std::to_string(slots[i]->final_suboptimality()) + ", output " +
            std::to_string(slots[i]->output_suboptimality));
      } catch (...) {
        errors[i] = std::current_exception();
        failed.store(true);
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  for (auto& r : slots) s.runs.push_back(std::move(*r));
  const std::size_t phases = s.runs.front().phases.size();
  for (std::size_t n = 0; n < phases; ++n) {
    std::vector<double> xs;
    for (const auto& r : s.runs) xs.push_back(r.phases[n].suboptimality);
    s.per_phase.push_back(mean_ci95(xs));
  }
  std::vector<double> fin;
  std::vector<double> out;
  for (const auto& r : s.runs) {
    fin.push_back(r.final_suboptimality());
    out.push_back(r.output_suboptimality);
  }
  s.final_phase = mean_ci95(fin);
  s.output = mean_ci95(out);

  if (!cfg.output_dir.empty()) {
    for (const auto& r : s.runs) {
      std::ostringstream os;
      write_run_csv(os, r);
      char name[32];
      std::snprintf(name, sizeof(name), "run_%03d.csv", r.replication);
      write_text_file(cfg.output_dir, name, os.str());
    }
    std::ostringstream agg;
    write_aggregate_csv(agg, s);
    write_text_file(cfg.output_dir, "aggregate.csv", agg.str());
    write_text_file(cfg.output_dir, "summary.json", s.to_json().dump(2) + "\n");
    if (cfg.svg) {
      std::ostringstream svg;
      write_curve_svg(svg, s);
      write_text_file(cfg.output_dir, "curve.svg", svg.str());
    }
  }
  return s;
}

std::vector<AccountingRow> accounting_table(const ExperimentConfig& pg_cfg,
                                            const RunReport& pg,
                                            const ExperimentConfig& pc_cfg,
                                            const RunReport& pc) {
  if (pg.algorithm == Algorithm::kPcPg || pc.algorithm != Algorithm::kPcPg) {
    throw ConfigError("accounting_table: need a preference run and a pc_pg run");
  }
  if (pg_cfg.phases != pc_cfg.phases ||
      pg_cfg.coverage_samples != pc_cfg.coverage_samples ||
      pg_cfg.iterations != pc_cfg.iterations ||
      pg_cfg.sgd_steps != pc_cfg.sgd_steps) {
    throw ConfigError("accounting_table: runs differ in (N, K, T, M_SGD)");
  }
  auto row = [](const RunReport& r) {
    AccountingRow a;
    a.algorithm = algorithm_name(r.algorithm);
    a.trajectories = r.trajectories;
    a.formula_trajectories = r.formula_trajectories;
    a.transitions = r.transitions;
    a.transitions_per_trajectory =
        r.trajectories == 0 ? kNaN
                            : static_cast<double>(r.transitions) /
                                  static_cast<double>(r.trajectories);
    a.true_reward_observations = r.true_reward_observations;
    a.true_reward_reads = r.true_reward_reads;
    a.queries = r.queries;
    return a;
  };
  return {row(pg), row(pc)};
}

}  // namespace pgrlhf
