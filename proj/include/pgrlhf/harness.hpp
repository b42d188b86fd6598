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

#ifndef PGRLHF_HARNESS_HPP_
#define PGRLHF_HARNESS_HPP_

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "pgrlhf/mdp.hpp"

namespace pgrlhf {

// Bad or inconsistent configuration. The CLI maps it to exit code 2.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Algorithm { kPgRlhf, kPcPg, kNnPgRlhf };
std::string algorithm_name(Algorithm a);
Algorithm parse_algorithm(const std::string& name);  // throws ConfigError

struct ExperimentConfig {
  // Environment: Bidirectional Lock of this horizon unless mdp_path is set.
  int lock_horizon = 5;
  std::string mdp_path;

  Algorithm algorithm = Algorithm::kPgRlhf;
  int phases = 30;              // N
  int iterations = 100;         // T
  int coverage_samples = 2500;  // K
  int sgd_steps = 2500;         // M_SGD (also M^theta, M^mu for nn)
  int hf_queries = 2500;        // M_HF
  double eta = 0.3;
  double beta = 0.95;
  double gamma = 0.9;
  double delta = 0.005;
  double zeta_cov = 1.0;
  double zeta_hf = 0.0;  // 0: 4 W_tau^2
  double w_mu = 0.0;     // 0: max(1, ||r||_2)
  double xi = 0.0;       // 0: default from xi_horizon
  std::string xi_horizon = "iterations";  // or "sgd"
  int mle_max_iters = 1000;
  double mle_grad_tol = 1e-8;

  // nn_pg_rlhf only.
  int width = 64;
  double radius = 5.0;
  double xi_theta = 0.01;
  double xi_mu = 0.01;

  int potential_samples = 200;
  int replications = 10;
  std::uint64_t base_seed = 1;
  int threads = 0;  // 0: hardware concurrency
  std::string output_dir;  // empty: no files
  bool svg = false;
  bool theory_mode = false;
  double theory_epsilon = 0.1;
  double c_base = 1.0;

  void validate() const;  // throws ConfigError
  nlohmann::json to_json() const;
  // Missing keys keep their defaults; unknown keys are a ConfigError.
  static ExperimentConfig from_json(const nlohmann::json& j);
};

// delta / (12 N (K + 1 + T) M_HF M_SGD).
double delta_prime(double delta, int phases, int coverage_samples,
                   int iterations, int hf_queries, int sgd_steps);
// log(1/delta') / (1 - gamma).
double trajectory_length_bound(double delta_prime, double gamma);
// The bonus threshold from the theory's parameter setting. NaN when an
// input is out of range.
double theory_beta(double gamma, double epsilon, double c_base, double w_q,
                   double w_mu, double zeta_hf, int dimension);

struct DerivedConstants {
  double delta_prime = 0.0;
  double w_tau = 0.0;
  double zeta_hf = 0.0;
  double reward_norm = 0.0;
  double w_mu = 0.0;
  bool w_mu_overridden = false;
  double c_mle = 0.0;
  double w_theta = 0.0;
  double w_q = 0.0;
  double w_a = 0.0;
  double xi = 0.0;
  double theory_beta = 0.0;  // NaN unless theory_mode
  std::string eta_warning;
  int dimension = 0;

  nlohmann::json to_json() const;
};

TabularMdp load_environment(const ExperimentConfig& cfg);  // ConfigError on bad files
DerivedConstants derive_constants(const ExperimentConfig& cfg,
                                  const TabularMdp& mdp);

struct PhaseRow {
  int phase = 0;
  double value = 0.0;          // V^{pi^{n+1}}(s_init)
  double suboptimality = 0.0;  // normalized
  std::uint64_t trajectories = 0;  // measured, cumulative
  std::uint64_t transitions = 0;
  std::uint64_t truncated = 0;
  std::uint64_t formula_trajectories = 0;
  std::uint64_t queries = 0;
  std::uint64_t true_reward_reads = 0;  // measured on the handle
  int known_states = 0;
  int bonused_pairs = 0;
  double max_theta_norm = 0.0;
  double mle_nll = 0.0;
  int mle_iterations = 0;
  double mle_pg_norm = 0.0;
  double mle_error = 0.0;   // Sigma_HF-norm error, NaN if not applicable
  double epsilon_hf = 0.0;  // envelope, may be +inf
  double potential_mean = 0.0;
  double potential_cumulative = 0.0;
};

struct RunReport {
  Algorithm algorithm = Algorithm::kPgRlhf;
  int replication = 0;
  std::uint64_t seed = 0;
  std::vector<PhaseRow> phases;
  double v_star = 0.0;
  double output_value = 0.0;          // V^{pi_out}
  double output_suboptimality = 0.0;
  std::uint64_t trajectories = 0;
  std::uint64_t transitions = 0;
  std::uint64_t truncated = 0;
  std::uint64_t formula_trajectories = 0;
  std::uint64_t queries = 0;
  // Counting convention: every environment step of a known-reward learner
  // reveals r(s, a); zero for the preference learners.
  std::uint64_t true_reward_observations = 0;
  std::uint64_t true_reward_reads = 0;

  // Suboptimality of pi^N, the last point of the per-phase curve.
  double final_suboptimality() const;
  double query_sample_ratio() const;
  nlohmann::json to_json() const;
};

// Closed-form trajectory count after `phases` phases.
std::uint64_t formula_trajectories(Algorithm a, int phases, int coverage_samples,
                                   int hf_queries, int iterations,
                                   int sgd_steps);

// One replication with seed base_seed + replication. Learner stream is
// seeded_rng(seed, 0); the potential diagnostic draws from stream 1.
RunReport run_single(const ExperimentConfig& cfg, const TabularMdp& mdp,
                     int replication);

struct Interval {
  double mean = 0.0;
  double low = 0.0;
  double high = 0.0;
};
// Mean and 95% normal-approximation interval (zero width for n = 1).
Interval mean_ci95(const std::vector<double>& xs);

struct ExperimentSummary {
  ExperimentConfig config;
  DerivedConstants constants;
  std::vector<RunReport> runs;  // by replication index
  std::vector<Interval> per_phase;
  Interval final_phase;
  Interval output;

  nlohmann::json to_json() const;
};

// Runs the replications on a worker pool and aggregates in index order.
// Writes run_<i>.csv, aggregate.csv, summary.json (and curve.svg) when
// output_dir is set. A failed replication rethrows.
ExperimentSummary run_experiment(const ExperimentConfig& cfg,
                                 std::ostream* log = nullptr);

struct AccountingRow {
  std::string algorithm;
  std::uint64_t trajectories = 0;
  std::uint64_t formula_trajectories = 0;
  std::uint64_t transitions = 0;
  double transitions_per_trajectory = 0.0;
  std::uint64_t true_reward_observations = 0;
  std::uint64_t true_reward_reads = 0;
  std::uint64_t queries = 0;
};

// Rows for a pg_rlhf run and a pc_pg run that share (N, K, T, M_SGD).
// Throws ConfigError on a mismatch or wrong algorithms.
std::vector<AccountingRow> accounting_table(const ExperimentConfig& pg_cfg,
                                            const RunReport& pg,
                                            const ExperimentConfig& pc_cfg,
                                            const RunReport& pc);

// CSV and SVG emitters (report_io.cc).
void write_run_csv(std::ostream& out, const RunReport& run);
void write_aggregate_csv(std::ostream& out, const ExperimentSummary& s);
void write_accounting_csv(std::ostream& out,
                          const std::vector<AccountingRow>& rows);
void write_curve_svg(std::ostream& out, const ExperimentSummary& s);
// Writes `contents` to dir/name; std::runtime_error naming the path on
// failure.
void write_text_file(const std::string& dir, const std::string& name,
                     const std::string& contents);

inline constexpr int kCsvSchemaVersion = 1;

}  // namespace pgrlhf

#endif  // PGRLHF_HARNESS_HPP_
