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

// Command-line front end: run / compare / diag.
//
// Exit codes: 0 success, 2 configuration error, 3 runtime failure.

#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pgrlhf/evaluation.hpp"
#include "pgrlhf/features.hpp"
#include "pgrlhf/harness.hpp"
#include "pgrlhf/preference.hpp"
#include "pgrlhf/rng.hpp"
#include "pgrlhf/rollout.hpp"

namespace {

using pgrlhf::ConfigError;
using pgrlhf::ExperimentConfig;

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

// --config is applied before the other flags so that flags override it.
std::string find_config_path(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--config") == 0 && i + 1 < argc) return argv[i + 1];
    if (std::strncmp(argv[i], "--config=", 9) == 0) return argv[i] + 9;
  }
  return {};
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config file '" + path + "': " + e.what());
  }
  return ExperimentConfig::from_json(j);
}

void add_config_flags(CLI::App* app, ExperimentConfig& c, std::string& algo,
                      std::string& config_path) {
  app->add_option("--config", config_path, "JSON config file (flags override it)");
  app->add_option("--lock-horizon", c.lock_horizon, "Bidirectional Lock horizon H");
  app->add_option("--mdp", c.mdp_path, "JSON MDP file instead of the lock");
  app->add_option("--algorithm", algo, "pg_rlhf | pc_pg | nn_pg_rlhf");
  app->add_option("-N,--phases", c.phases);
  app->add_option("-T,--iterations", c.iterations);
  app->add_option("-K,--coverage-samples", c.coverage_samples);
  app->add_option("--sgd-steps", c.sgd_steps, "M_SGD");
  app->add_option("--hf-queries", c.hf_queries, "M_HF");
  app->add_option("--eta", c.eta);
  app->add_option("--beta", c.beta);
  app->add_option("--gamma", c.gamma);
  app->add_option("--delta", c.delta);
  app->add_option("--zeta-cov", c.zeta_cov);
  app->add_option("--zeta-hf", c.zeta_hf, "0 selects 4 W_tau^2");
  app->add_option("--w-mu", c.w_mu, "0 selects max(1, ||r||)");
  app->add_option("--xi", c.xi, "0 selects the default step");
  app->add_option("--xi-horizon", c.xi_horizon, "iterations | sgd");
  app->add_option("--mle-max-iters", c.mle_max_iters);
  app->add_option("--mle-grad-tol", c.mle_grad_tol);
  app->add_option("--width", c.width, "network width m");
  app->add_option("--radius", c.radius, "network projection radius R");
  app->add_option("--xi-theta", c.xi_theta);
  app->add_option("--xi-mu", c.xi_mu);
  app->add_option("--potential-samples", c.potential_samples);
  app->add_option("--replications", c.replications);
  app->add_option("--seed", c.base_seed, "base seed; replication i uses seed+i");
  app->add_option("--threads", c.threads, "0 selects hardware concurrency");
  app->add_option("-o,--out", c.output_dir, "output directory");
  app->add_flag("--svg", c.svg, "also write curve.svg");
  app->add_flag("--theory-mode", c.theory_mode);
  app->add_option("--theory-epsilon", c.theory_epsilon);
  app->add_option("--c-base", c.c_base);
}

void print_summary(const pgrlhf::ExperimentSummary& s, std::ostream& out) {
  out << pgrlhf::algorithm_name(s.config.algorithm) << ": " << s.runs.size()
      << " runs\n";
  out << "  final-phase suboptimality  mean " << s.final_phase.mean
      << "  95% CI [" << s.final_phase.low << ", " << s.final_phase.high << "]\n";
  out << "  output-mixture suboptimality mean " << s.output.mean << "  95% CI ["
      << s.output.low << ", " << s.output.high << "]\n";
  const auto& r = s.runs.front();
  out << "  trajectories " << r.trajectories << " (formula "
      << r.formula_trajectories << "), transitions " << r.transitions
      << ", queries " << r.queries << ", true-reward observations "
      << r.true_reward_observations << "\n";
}

int cmd_run(const ExperimentConfig& cfg) {
  const auto s = pgrlhf::run_experiment(cfg, &std::cerr);
  print_summary(s, std::cout);
  return 0;
}

int cmd_compare(ExperimentConfig cfg) {
  const std::string base_dir = cfg.output_dir;
  ExperimentConfig pg = cfg;
  pg.algorithm = pgrlhf::Algorithm::kPgRlhf;
  ExperimentConfig pc = cfg;
  pc.algorithm = pgrlhf::Algorithm::kPcPg;
  if (!base_dir.empty()) {
    pg.output_dir = base_dir + "/pg_rlhf";
    pc.output_dir = base_dir + "/pc_pg";
  }
  const auto spg = pgrlhf::run_experiment(pg, &std::cerr);
  const auto spc = pgrlhf::run_experiment(pc, &std::cerr);
  print_summary(spg, std::cout);
  print_summary(spc, std::cout);
  const auto rows =
      pgrlhf::accounting_table(pg, spg.runs.front(), pc, spc.runs.front());
  std::ostringstream csv;
  pgrlhf::write_accounting_csv(csv, rows);
  std::cout << "\naccounting (replication 0)\n" << csv.str();
  std::cout << "final-phase gap |pg_rlhf - pc_pg| = "
            << std::abs(spg.final_phase.mean - spc.final_phase.mean) << "\n";
  if (!base_dir.empty()) pgrlhf::write_text_file(base_dir, "accounting.csv", csv.str());
  return 0;
}

int cmd_diag(const ExperimentConfig& cfg, int pairs) {
  cfg.validate();
  const auto mdp = pgrlhf::load_environment(cfg);
  const auto k = pgrlhf::derive_constants(cfg, mdp);
  nlohmann::json j;
  j["constants"] = k.to_json();
  if (cfg.theory_mode) {
    j["theory_beta_vs_configured"] = {{"theory", k.theory_beta},
                                      {"configured", cfg.beta}};
  }
  const auto vi = pgrlhf::value_iteration(mdp);
  j["v_star"] = vi.values(mdp.initial_state());
  const auto uniform = pgrlhf::Policy::uniform(mdp.num_states(), mdp.num_actions());
  j["uniform_value"] = pgrlhf::exact_policy_value(mdp, uniform)(mdp.initial_state());

  pgrlhf::Rng rng = pgrlhf::seeded_rng(cfg.base_seed, 7);
  const auto fm = pgrlhf::one_hot_features(mdp);
  const auto baseline = pgrlhf::default_baseline_policy(mdp);
  const auto cov =
      pgrlhf::baseline_coverage_diagnostic(mdp, fm, uniform, baseline, pairs, rng);
  j["baseline_coverage"] = {{"ratio", cov.ratio},
                            {"min_eig_difference", cov.min_eig_difference},
                            {"max_eig_baseline", cov.max_eig_baseline},
                            {"support_rank", cov.support_rank}};
  // Longest of `pairs` uniform-policy rollouts against the W_tau bound.
  pgrlhf::Simulator sim(mdp);
  std::size_t longest = 0;
  for (int i = 0; i < pairs; ++i) {
    longest = std::max(longest,
                       sim.rollout(uniform, pgrlhf::StartSpec::initial(), rng).steps.size());
  }
  j["trajectory_length"] = {{"longest_observed", longest},
                            {"mean_observed",
                             static_cast<double>(sim.counters().transitions) /
                                 static_cast<double>(sim.counters().trajectories)},
                            {"w_tau_bound", k.w_tau}};
  const std::string text = j.dump(2) + "\n";
  std::cout << text;
  if (!cfg.output_dir.empty()) pgrlhf::write_text_file(cfg.output_dir, "diag.json", text);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Preference-based policy optimization experiments"};
  app.require_subcommand(1);
  ExperimentConfig cfg;
  std::string algo;
  std::string config_path;
  int diag_pairs = 2000;
  try {
    const std::string path = find_config_path(argc, argv);
    if (!path.empty()) cfg = load_config_file(path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  auto* run = app.add_subcommand("run", "run replications of one algorithm");
  auto* compare = app.add_subcommand("compare", "pg_rlhf vs pc_pg with accounting table");
  auto* diag = app.add_subcommand("diag", "derived constants and diagnostics");
  add_config_flags(run, cfg, algo, config_path);
  add_config_flags(compare, cfg, algo, config_path);
  add_config_flags(diag, cfg, algo, config_path);
  diag->add_option("--pairs", diag_pairs, "samples for the coverage diagnostic");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (!algo.empty()) cfg.algorithm = pgrlhf::parse_algorithm(algo);
    cfg.validate();
    if (diag_pairs <= 0) throw ConfigError("--pairs must be > 0");
    if (run->parsed()) return cmd_run(cfg);
    if (compare->parsed()) return cmd_compare(cfg);
    return cmd_diag(cfg, diag_pairs);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
