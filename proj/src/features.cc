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

#include "pgrlhf/features.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

#include "pgrlhf/kernels.hpp"

namespace pgrlhf {
namespace {

constexpr double kNormSlack = 1e-12;

std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace

FeatureMap::FeatureMap(int num_states, int num_actions, int dimension,
                       std::vector<double> table)
    : num_states_(num_states),
      num_actions_(num_actions),
      dimension_(dimension),
      table_(std::move(table)) {
  if (num_states <= 0 || num_actions <= 0 || dimension <= 0) {
    throw std::invalid_argument("FeatureMap: sizes must be positive");
  }
  const auto rows = static_cast<std::size_t>(num_states) * num_actions;
  if (table_.size() != rows * dimension) {
    throw std::invalid_argument("FeatureMap: table has wrong size");
  }
  for (std::size_t r = 0; r < rows; ++r) {
    const double norm2 =
        kernels::squared_norm({table_.data() + r * dimension,
                               static_cast<std::size_t>(dimension)});
    if (!(std::sqrt(norm2) <= 1.0 + kNormSlack)) {
      throw std::invalid_argument("FeatureMap: feature row " +
                                  std::to_string(r) + " has norm > 1");
    }
  }
}

void FeatureMap::scores(int s, std::span<const double> w,
                        std::span<double> out) const {
  for (int a = 0; a < num_actions_; ++a) {
    out[a] = kernels::dot(feature(s, a), w);
  }
}

FeatureMap one_hot_features(const TabularMdp& mdp) {
  const int d = mdp.num_pairs();
  std::vector<double> table(static_cast<std::size_t>(d) * d, 0.0);
  for (int j = 0; j < d; ++j) table[static_cast<std::size_t>(j) * d + j] = 1.0;
  return FeatureMap(mdp.num_states(), mdp.num_actions(), d, std::move(table));
}

Eigen::VectorXd trajectory_feature_sum(const FeatureMap& fm,
                                       const Trajectory& tau) {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(fm.dimension());
  std::span<double> out(sum.data(), sum.size());
  for (const auto& step : tau.steps) {
    kernels::axpy(1.0, fm.feature(step.state, step.action), out);
  }
  return sum;
}

Eigen::VectorXd trajectory_feature_difference(const FeatureMap& fm,
                                              const Trajectory& tau1,
                                              const Trajectory& tau2) {
  Eigen::VectorXd diff = Eigen::VectorXd::Zero(fm.dimension());
  std::span<double> out(diff.data(), diff.size());
  for (const auto& step : tau1.steps) {
    kernels::axpy(1.0, fm.feature(step.state, step.action), out);
  }
  for (const auto& step : tau2.steps) {
    kernels::axpy(-1.0, fm.feature(step.state, step.action), out);
  }
  return diff;
}

double CovarianceSnapshot::inv_quadratic_form(std::span<const double> x) const {
  if (!factor_) throw std::logic_error("CovarianceSnapshot: empty snapshot");
  if (x.size() != static_cast<std::size_t>(dimension_)) {
    throw std::invalid_argument("CovarianceSnapshot: dimension mismatch");
  }
  Eigen::Map<const Eigen::VectorXd> xv(x.data(), dimension_);
  const Eigen::VectorXd y = factor_->matrixL().solve(xv);
  return y.squaredNorm();
}

CovarianceAccumulator::CovarianceAccumulator(int dimension, double zeta)
    : dimension_(dimension),
      zeta_(zeta),
      matrix_(static_cast<std::size_t>(dimension) * dimension, 0.0) {
  if (dimension <= 0) {
    throw std::invalid_argument("CovarianceAccumulator: dimension must be > 0");
  }
  if (!(zeta >= 0.0)) {
    throw std::invalid_argument("CovarianceAccumulator: zeta must be >= 0");
  }
}

CovarianceAccumulator::CovarianceAccumulator(const CovarianceAccumulator& other)
    : dimension_(other.dimension_),
      zeta_(other.zeta_),
      sample_count_(other.sample_count_),
      total_weight_(other.total_weight_),
      matrix_(other.matrix_) {
  std::lock_guard<std::mutex> lock(other.mutex_);
  factor_ = other.factor_;
}

CovarianceAccumulator& CovarianceAccumulator::operator=(
    const CovarianceAccumulator& other) {
  if (this == &other) return *this;
  std::shared_ptr<const Eigen::LLT<Eigen::MatrixXd>> factor;
  {
    std::lock_guard<std::mutex> lock(other.mutex_);
    factor = other.factor_;
  }
  dimension_ = other.dimension_;
  zeta_ = other.zeta_;
  sample_count_ = other.sample_count_;
  total_weight_ = other.total_weight_;
  matrix_ = other.matrix_;
  std::lock_guard<std::mutex> lock(mutex_);
  factor_ = std::move(factor);
  return *this;
}

void CovarianceAccumulator::accumulate(std::span<const double> v,
                                       double weight) {
  if (v.size() != static_cast<std::size_t>(dimension_)) {
    throw std::invalid_argument("CovarianceAccumulator: dimension mismatch");
  }
  if (!(weight > 0.0)) {
    throw std::invalid_argument("CovarianceAccumulator: weight must be > 0");
  }
  kernels::rank1_update(weight, v, matrix_);
  ++sample_count_;
  total_weight_ += weight;
  std::lock_guard<std::mutex> lock(mutex_);
  factor_.reset();
}

std::shared_ptr<const Eigen::LLT<Eigen::MatrixXd>>
CovarianceAccumulator::factor() const {
  std::lock_guard<std::mutex> lock(mutex_);
  if (!factor_) {
    auto llt =
        std::make_shared<Eigen::LLT<Eigen::MatrixXd>>(regularized_matrix());
    if (llt->info() != Eigen::Success) {
      throw std::logic_error(
          "CovarianceAccumulator: Cholesky factorization failed; matrix is "
          "not positive definite (corrupted accumulator or zeta = 0)");
    }
    factor_ = std::move(llt);
  }
  return factor_;
}

double CovarianceAccumulator::inv_quadratic_form(
    std::span<const double> x) const {
  if (x.size() != static_cast<std::size_t>(dimension_)) {
    throw std::invalid_argument("CovarianceAccumulator: dimension mismatch");
  }
  const auto llt = factor();
  Eigen::Map<const Eigen::VectorXd> xv(x.data(), dimension_);
  const Eigen::VectorXd y = llt->matrixL().solve(xv);
  return y.squaredNorm();
}

double CovarianceAccumulator::quadratic_form(std::span<const double> x) const {
  if (x.size() != static_cast<std::size_t>(dimension_)) {
    throw std::invalid_argument("CovarianceAccumulator: dimension mismatch");
  }
  std::vector<double> mx(dimension_);
  kernels::gemv(matrix_, dimension_, dimension_, x, mx);
  return kernels::dot(x, mx);
}

Eigen::MatrixXd CovarianceAccumulator::matrix() const {
  Eigen::MatrixXd m(dimension_, dimension_);
  for (int r = 0; r < dimension_; ++r) {
    for (int c = 0; c < dimension_; ++c) {
      m(r, c) = matrix_[static_cast<std::size_t>(r) * dimension_ + c];
    }
  }
  return m;
}

Eigen::MatrixXd CovarianceAccumulator::regularized_matrix() const {
  Eigen::MatrixXd m = matrix();
  m.diagonal().array() += zeta_;
  return m;
}

CovarianceSnapshot CovarianceAccumulator::snapshot() const {
  CovarianceSnapshot snap;
  snap.dimension_ = dimension_;
  snap.zeta_ = zeta_;
  snap.factor_ = factor();
  std::uint64_t h = 0xCBF29CE484222325ULL;
  h = fnv1a(matrix_.data(), matrix_.size() * sizeof(double), h);
  h = fnv1a(&zeta_, sizeof(zeta_), h);
  snap.digest_ = h;
  return snap;
}

CovarianceAccumulator scaled_hf_metric(int phase,
                                       std::span<const Eigen::VectorXd> diffs,
                                       double zeta_hf) {
  if (diffs.empty()) {
    throw std::invalid_argument("scaled_hf_metric: no feature differences");
  }
  CovarianceAccumulator metric(static_cast<int>(diffs.front().size()),
                               zeta_hf);
  if (phase == 0) return metric;
  const double weight =
      static_cast<double>(phase) / static_cast<double>(diffs.size());
  for (const auto& d : diffs) {
    if (d.squaredNorm() > 0.0) metric.accumulate(d, weight);
  }
  return metric;
}

std::vector<PotentialPoint> elliptical_potential_trace(
    std::span<const PotentialPhaseInput> phases) {
  std::vector<PotentialPoint> trace;
  trace.reserve(phases.size());
  double cumulative = 0.0;
  int n = 0;
  for (const auto& phase : phases) {
    if (phase.metric == nullptr || phase.samples.empty()) {
      throw std::invalid_argument(
          "elliptical_potential_trace: phase needs a metric and samples");
    }
    double sum = 0.0;
    for (const auto& x : phase.samples) {
      sum += phase.metric->inv_quadratic_form(x);
    }
    const double mean = sum / static_cast<double>(phase.samples.size());
    cumulative += mean;
    trace.push_back({n, mean, cumulative});
    ++n;
  }
  return trace;
}

}  // namespace pgrlhf
