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

#ifndef PGRLHF_FEATURES_HPP_
#define PGRLHF_FEATURES_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "pgrlhf/mdp.hpp"

namespace pgrlhf {

// phi(s, a) for every pair of a finite MDP, stored as a dense
// (S*A) x d row-major table. Every row has Euclidean norm <= 1.
class FeatureMap {
 public:
  // `table` holds num_states*num_actions rows of length `dimension`.
  // Throws std::invalid_argument on a size mismatch or a row with norm > 1.
  FeatureMap(int num_states, int num_actions, int dimension,
             std::vector<double> table);

  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }
  int dimension() const { return dimension_; }

  std::span<const double> feature(int s, int a) const {
    return {table_.data() + static_cast<std::size_t>(s * num_actions_ + a) *
                                dimension_,
            static_cast<std::size_t>(dimension_)};
  }
  Eigen::Map<const Eigen::VectorXd> feature_vector(int s, int a) const {
    const auto f = feature(s, a);
    return {f.data(), static_cast<Eigen::Index>(f.size())};
  }

  // phi(s, a)^T w for every action at s.
  void scores(int s, std::span<const double> w, std::span<double> out) const;

  std::span<const double> table() const { return table_; }

 private:
  int num_states_;
  int num_actions_;
  int dimension_;
  std::vector<double> table_;
};

// One-hot features: d = S*A, phi(s, a) = e_{s*A + a}.
FeatureMap one_hot_features(const TabularMdp& mdp);

// sum_h phi(s_h, a_h) over the trajectory.
Eigen::VectorXd trajectory_feature_sum(const FeatureMap& fm,
                                       const Trajectory& tau);

// sum(tau1) - sum(tau2).
Eigen::VectorXd trajectory_feature_difference(const FeatureMap& fm,
                                              const Trajectory& tau1,
                                              const Trajectory& tau2);

// Immutable Cholesky factor of (M + zeta I) taken from an accumulator.
class CovarianceSnapshot {
 public:
  CovarianceSnapshot() = default;

  int dimension() const { return dimension_; }
  double zeta() const { return zeta_; }
  // FNV-1a over the bytes of (M, zeta); identifies the snapshot in
  // serialized policies.
  std::uint64_t digest() const { return digest_; }

  // x^T (M + zeta I)^{-1} x.
  double inv_quadratic_form(std::span<const double> x) const;

 private:
  friend class CovarianceAccumulator;

  int dimension_ = 0;
  double zeta_ = 0.0;
  std::uint64_t digest_ = 0;
  std::shared_ptr<const Eigen::LLT<Eigen::MatrixXd>> factor_;
};

// Running sum of weighted outer products M = sum_i w_i v_i v_i^T with a
// ridge term zeta. Queries use a Cholesky factorization of (M + zeta I)
// that is recomputed lazily after mutation.
//
// Single writer. Concurrent queries are safe with each other but not with
// accumulate().
class CovarianceAccumulator {
 public:
  CovarianceAccumulator(int dimension, double zeta);
  CovarianceAccumulator(const CovarianceAccumulator& other);
  CovarianceAccumulator& operator=(const CovarianceAccumulator& other);

  int dimension() const { return dimension_; }
  double zeta() const { return zeta_; }
  std::size_t sample_count() const { return sample_count_; }
  double total_weight() const { return total_weight_; }

  // Adds weight * v v^T. Throws std::invalid_argument on a dimension
  // mismatch or nonpositive weight.
  void accumulate(std::span<const double> v, double weight);
  void accumulate(const Eigen::VectorXd& v, double weight) {
    accumulate(std::span<const double>(v.data(), v.size()), weight);
  }

  // x^T (M + zeta I)^{-1} x. Requires zeta > 0 or a nonsingular M.
  // Throws std::logic_error if the factorization fails.
  double inv_quadratic_form(std::span<const double> x) const;
  double inv_quadratic_form(const Eigen::VectorXd& x) const {
    return inv_quadratic_form(std::span<const double>(x.data(), x.size()));
  }

  // x^T M x (no ridge term).
  double quadratic_form(std::span<const double> x) const;

  // M, without the ridge term.
  Eigen::MatrixXd matrix() const;
  // M + zeta I.
  Eigen::MatrixXd regularized_matrix() const;

  CovarianceSnapshot snapshot() const;

 private:
  std::shared_ptr<const Eigen::LLT<Eigen::MatrixXd>> factor() const;

  int dimension_;
  double zeta_;
  std::size_t sample_count_ = 0;
  double total_weight_ = 0.0;
  std::vector<double> matrix_;  // row-major d x d
  mutable std::mutex mutex_;
  mutable std::shared_ptr<const Eigen::LLT<Eigen::MatrixXd>> factor_;
};

// The metric n * Sigma_HF^n built from one phase's feature differences:
// (n / M) sum_i d_i d_i^T + zeta_hf I. For n = 0 the sum is dropped, which
// gives zeta_hf I.
CovarianceAccumulator scaled_hf_metric(int phase,
                                       std::span<const Eigen::VectorXd> diffs,
                                       double zeta_hf);

struct PotentialPhaseInput {
  const CovarianceAccumulator* metric = nullptr;
  std::vector<Eigen::VectorXd> samples;
};

struct PotentialPoint {
  int phase = 0;
  double mean_sq_norm = 0.0;
  double cumulative = 0.0;
};

// Per phase: mean of x^T metric^{-1} x over the samples, and the running
// sum of those means. Phases are taken in the order given.
std::vector<PotentialPoint> elliptical_potential_trace(
    std::span<const PotentialPhaseInput> phases);

}  // namespace pgrlhf

#endif  // PGRLHF_FEATURES_HPP_
