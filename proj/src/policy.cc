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

#include "pgrlhf/policy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "pgrlhf/kernels.hpp"

namespace pgrlhf {

ActionTable::ActionTable(int num_states, int num_actions,
                         std::vector<double> probabilities)
    : num_states_(num_states),
      num_actions_(num_actions),
      probs_(std::move(probabilities)),
      cdf_(probs_.size()) {
  if (num_states <= 0 || num_actions <= 0 ||
      probs_.size() != static_cast<std::size_t>(num_states) * num_actions) {
    throw std::invalid_argument("ActionTable: bad shape");
  }
  for (int s = 0; s < num_states; ++s) {
    double* row = probs_.data() + static_cast<std::size_t>(s) * num_actions;
    double sum = 0.0;
    for (int a = 0; a < num_actions; ++a) {
      if (!(row[a] >= 0.0) || !std::isfinite(row[a])) {
        throw std::invalid_argument("ActionTable: negative probability");
      }
      sum += row[a];
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw std::invalid_argument("ActionTable: row " + std::to_string(s) +
                                  " sums to " + std::to_string(sum));
    }
    double acc = 0.0;
    for (int a = 0; a < num_actions; ++a) {
      row[a] /= sum;
      acc += row[a];
      cdf_[static_cast<std::size_t>(s) * num_actions + a] = acc;
    }
  }
}

ActionTable ActionTable::uniform(int num_states, int num_actions) {
  return ActionTable(
      num_states, num_actions,
      std::vector<double>(static_cast<std::size_t>(num_states) * num_actions,
                          1.0 / num_actions));
}

std::vector<double> softmax_rows(std::span<const double> scores,
                                 int num_states, int num_actions) {
  std::vector<double> out(scores.size());
  for (int s = 0; s < num_states; ++s) {
    const double* in = scores.data() + static_cast<std::size_t>(s) * num_actions;
    double* o = out.data() + static_cast<std::size_t>(s) * num_actions;
    const double mx = *std::max_element(in, in + num_actions);
    double sum = 0.0;
    for (int a = 0; a < num_actions; ++a) {
      o[a] = std::exp(in[a] - mx);
      sum += o[a];
    }
    for (int a = 0; a < num_actions; ++a) o[a] /= sum;
  }
  return out;
}

Policy::Policy(std::shared_ptr<const ActionTable> table, Kind kind)
    : kind_(kind), table_(std::move(table)) {
  if (!table_) throw std::invalid_argument("Policy: null action table");
  if (kind == Kind::kMixture) {
    throw std::invalid_argument("Policy: use Policy::mixture");
  }
  num_states_ = table_->num_states();
  num_actions_ = table_->num_actions();
}

Policy Policy::mixture(std::vector<Policy> components) {
  if (components.empty()) {
    throw std::invalid_argument("Policy::mixture: no components");
  }
  for (const auto& c : components) {
    if (c.num_states() != components.front().num_states() ||
        c.num_actions() != components.front().num_actions()) {
      throw std::invalid_argument("Policy::mixture: component shape mismatch");
    }
  }
  // Constructed through a leaf to reuse validation, then rewired.
  Policy p = components.front();
  p.kind_ = Kind::kMixture;
  p.table_.reset();
  p.components_ =
      std::make_shared<const std::vector<Policy>>(std::move(components));
  return p;
}

Policy Policy::uniform(int num_states, int num_actions) {
  return Policy(std::make_shared<const ActionTable>(
                    ActionTable::uniform(num_states, num_actions)),
                Kind::kTabular);
}

std::string Policy::kind_name() const {
  switch (kind_) {
    case Kind::kTabular: return "tabular";
    case Kind::kLogLinear: return "log_linear";
    case Kind::kPartitioned: return "partitioned";
    case Kind::kNeural: return "neural";
    case Kind::kMixture: return "mixture";
  }
  return "unknown";
}

const ActionTable& Policy::table() const {
  if (!table_) throw std::logic_error("Policy::table: mixture has no table");
  return *table_;
}

std::span<const Policy> Policy::components() const {
  if (!components_) return {};
  return *components_;
}

std::vector<double> Policy::action_distribution(int s) const {
  if (s < 0 || s >= num_states_) {
    throw std::out_of_range("Policy::action_distribution: state out of range");
  }
  if (table_) {
    const auto d = table_->distribution(s);
    return {d.begin(), d.end()};
  }
  std::vector<double> avg(num_actions_, 0.0);
  for (const auto& c : *components_) {
    const auto d = c.action_distribution(s);
    for (int a = 0; a < num_actions_; ++a) avg[a] += d[a];
  }
  for (double& p : avg) p /= static_cast<double>(components_->size());
  return avg;
}

const ActionTable& Policy::draw_episode_table(Rng& rng) const {
  const Policy* p = this;
  while (p->components_) {
    p = &(*p->components_)[rng.index(p->components_->size())];
  }
  return *p->table_;
}

std::size_t Policy::leaf_count() const {
  if (table_) return 1;
  std::size_t n = 0;
  for (const auto& c : *components_) n += c.leaf_count();
  return n;
}

namespace {

std::shared_ptr<const ActionTable> log_linear_table(const FeatureMap& fm,
                                                    const Eigen::VectorXd& w) {
  const int S = fm.num_states();
  const int A = fm.num_actions();
  std::vector<double> scores(static_cast<std::size_t>(S) * A);
  const std::span<const double> wspan(w.data(), w.size());
  for (int s = 0; s < S; ++s) {
    fm.scores(s, wspan, {scores.data() + static_cast<std::size_t>(s) * A,
                         static_cast<std::size_t>(A)});
  }
  return std::make_shared<const ActionTable>(S, A, softmax_rows(scores, S, A));
}

}  // namespace

LogLinearPolicy::LogLinearPolicy(std::shared_ptr<const FeatureMap> features,
                                 Eigen::VectorXd w)
    : features_(std::move(features)), w_(std::move(w)) {
  if (!features_) throw std::invalid_argument("LogLinearPolicy: null features");
  if (w_.size() != features_->dimension()) {
    throw std::invalid_argument("LogLinearPolicy: parameter dimension mismatch");
  }
  table_ = log_linear_table(*features_, w_);
}

LogLinearPolicy LogLinearPolicy::zero(
    std::shared_ptr<const FeatureMap> features) {
  const int d = features->dimension();
  return LogLinearPolicy(std::move(features), Eigen::VectorXd::Zero(d));
}

nlohmann::json LogLinearPolicy::to_json() const {
  return {{"kind", "log_linear"},
          {"dimension", w_.size()},
          {"w", std::vector<double>(w_.data(), w_.data() + w_.size())}};
}

LogLinearPolicy LogLinearPolicy::from_json(
    const nlohmann::json& j, std::shared_ptr<const FeatureMap> features) {
  const auto w = j.at("w").get<std::vector<double>>();
  return LogLinearPolicy(std::move(features),
                         Eigen::Map<const Eigen::VectorXd>(
                             w.data(), static_cast<Eigen::Index>(w.size())));
}

LogLinearPolicy npg_step(const LogLinearPolicy& policy,
                         const Eigen::VectorXd& theta, double eta) {
  if (theta.size() != policy.parameters().size()) {
    throw std::invalid_argument("npg_step: dimension mismatch");
  }
  Eigen::VectorXd w = policy.parameters();
  kernels::axpy(eta, {theta.data(), static_cast<std::size_t>(theta.size())},
                {w.data(), static_cast<std::size_t>(w.size())});
  return LogLinearPolicy(policy.features_ptr(), std::move(w));
}

BonusPartition::BonusPartition(int num_states, int num_actions,
                               QuadraticForm form, double beta, double gamma,
                               std::uint64_t digest)
    : num_states_(num_states),
      num_actions_(num_actions),
      form_(std::move(form)),
      beta_(beta),
      gamma_(gamma),
      digest_(digest),
      memo_(new std::atomic<signed char>[static_cast<std::size_t>(num_states) *
                                         num_actions]) {
  if (!(beta > 0.0)) {
    throw std::invalid_argument("BonusPartition: beta must be > 0");
  }
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw std::invalid_argument("BonusPartition: gamma must lie in [0, 1)");
  }
  for (std::size_t i = 0; i < static_cast<std::size_t>(num_states) * num_actions;
       ++i) {
    memo_[i].store(-1, std::memory_order_relaxed);
  }
}

std::shared_ptr<const BonusPartition> BonusPartition::linear(
    std::shared_ptr<const FeatureMap> features, CovarianceSnapshot snapshot,
    double beta, double gamma) {
  if (snapshot.dimension() != features->dimension()) {
    throw std::invalid_argument("BonusPartition: snapshot dimension mismatch");
  }
  const int S = features->num_states();
  const int A = features->num_actions();
  const std::uint64_t digest = snapshot.digest();
  auto form = [features, snap = std::move(snapshot)](int s, int a) {
    return snap.inv_quadratic_form(features->feature(s, a));
  };
  return std::make_shared<const BonusPartition>(S, A, std::move(form), beta,
                                                gamma, digest);
}

bool BonusPartition::is_bonused(int s, int a) const {
  const std::size_t i = static_cast<std::size_t>(s) * num_actions_ + a;
  signed char v = memo_[i].load(std::memory_order_relaxed);
  if (v < 0) {
    v = form_(s, a) >= beta_ ? 1 : 0;
    memo_[i].store(v, std::memory_order_relaxed);
  }
  return v == 1;
}

bool BonusPartition::in_known_set(int s) const {
  for (int a = 0; a < num_actions_; ++a) {
    if (is_bonused(s, a)) return false;
  }
  return true;
}

std::vector<int> BonusPartition::bonused_actions(int s) const {
  std::vector<int> out;
  for (int a = 0; a < num_actions_; ++a) {
    if (is_bonused(s, a)) out.push_back(a);
  }
  return out;
}

PartitionedPolicy::PartitionedPolicy(
    std::shared_ptr<const BonusPartition> partition,
    std::shared_ptr<const ActionTable> inner, Policy::Kind /*inner_kind*/)
    : partition_(std::move(partition)), inner_(std::move(inner)) {
  if (!partition_ || !inner_) {
    throw std::invalid_argument("PartitionedPolicy: null argument");
  }
  const int S = partition_->num_states();
  const int A = partition_->num_actions();
  if (inner_->num_states() != S || inner_->num_actions() != A) {
    throw std::invalid_argument("PartitionedPolicy: shape mismatch");
  }
  std::vector<double> probs(static_cast<std::size_t>(S) * A, 0.0);
  for (int s = 0; s < S; ++s) {
    double* row = probs.data() + static_cast<std::size_t>(s) * A;
    const auto bonused = partition_->bonused_actions(s);
    if (bonused.empty()) {
      const auto d = inner_->distribution(s);
      std::copy(d.begin(), d.end(), row);
    } else {
      for (int a : bonused) row[a] = 1.0 / static_cast<double>(bonused.size());
    }
  }
  table_ = std::make_shared<const ActionTable>(S, A, std::move(probs));
}

PartitionedPolicy freeze_partition(const LogLinearPolicy& inner,
                                   const CovarianceSnapshot& snapshot,
                                   double beta, double gamma) {
  auto partition =
      BonusPartition::linear(inner.features_ptr(), snapshot, beta, gamma);
  return PartitionedPolicy(std::move(partition), inner.table_ptr());
}

nlohmann::json partitioned_to_json(const LogLinearPolicy& inner,
                                   const BonusPartition& partition) {
  nlohmann::json j = inner.to_json();
  j["kind"] = "partitioned";
  j["beta"] = partition.beta();
  j["gamma"] = partition.gamma();
  j["covariance_digest"] = partition.digest();
  return j;
}

}  // namespace pgrlhf
