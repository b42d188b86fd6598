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

#include "pgrlhf/reward_fn.hpp"

#include <stdexcept>

#include "pgrlhf/kernels.hpp"

namespace pgrlhf {

namespace {

thread_local bool t_in_preference_scope = false;

}  // namespace

RewardOracleHandle::RewardOracleHandle(int num_states, int num_actions,
                                       std::vector<double> table)
    : num_states_(num_states),
      num_actions_(num_actions),
      table_(std::move(table)) {
  if (table_.size() != static_cast<std::size_t>(num_states) * num_actions) {
    throw std::invalid_argument("RewardOracleHandle: table has wrong size");
  }
}

double RewardOracleHandle::observe(int s, int a) const {
  if (t_in_preference_scope) {
    preference_reads_.fetch_add(1, std::memory_order_relaxed);
  } else {
    if (poisoned_.load(std::memory_order_relaxed)) {
      throw RewardIsolationError(
          "true reward read outside the preference oracle at (" +
          std::to_string(s) + ", " + std::to_string(a) + ")");
    }
    direct_reads_.fetch_add(1, std::memory_order_relaxed);
  }
  return table_[static_cast<std::size_t>(s) * num_actions_ + a];
}

RewardOracleHandle::PreferenceScope::PreferenceScope()
    : previous_(t_in_preference_scope) {
  t_in_preference_scope = true;
}

RewardOracleHandle::PreferenceScope::~PreferenceScope() {
  t_in_preference_scope = previous_;
}

RewardFn RewardFn::table(int num_states, int num_actions,
                         std::vector<double> values) {
  if (values.size() != static_cast<std::size_t>(num_states) * num_actions) {
    throw std::invalid_argument("RewardFn::table: wrong size");
  }
  auto shared = std::make_shared<const std::vector<double>>(std::move(values));
  return RewardFn(Kind::kTable, num_states, num_actions,
                  [shared, num_actions](int s, int a) {
                    return (*shared)[static_cast<std::size_t>(s) * num_actions +
                                     a];
                  });
}

RewardFn RewardFn::linear(std::shared_ptr<const FeatureMap> features,
                          Eigen::VectorXd mu) {
  if (mu.size() != features->dimension()) {
    throw std::invalid_argument("RewardFn::linear: dimension mismatch");
  }
  // Tabulated once; phi and mu are fixed for the lifetime of the function.
  const int S = features->num_states();
  const int A = features->num_actions();
  std::vector<double> values(static_cast<std::size_t>(S) * A);
  const std::span<const double> m(mu.data(), mu.size());
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      values[static_cast<std::size_t>(s) * A + a] =
          kernels::dot(features->feature(s, a), m);
    }
  }
  RewardFn r = table(S, A, std::move(values));
  r.kind_ = Kind::kLinear;
  return r;
}

RewardFn RewardFn::with_bonus(RewardFn base,
                              std::shared_ptr<const BonusPartition> bonus) {
  if (!bonus) throw std::invalid_argument("RewardFn::with_bonus: null bonus");
  if (bonus->num_states() != base.num_states_ ||
      bonus->num_actions() != base.num_actions_) {
    throw std::invalid_argument("RewardFn::with_bonus: shape mismatch");
  }
  auto inner = base.rule_;
  RewardFn r(Kind::kBonusAugmented, base.num_states_, base.num_actions_,
             [inner, bonus](int s, int a) {
               return inner(s, a) + bonus->bonus(s, a);
             });
  r.bonus_ = std::move(bonus);
  return r;
}

RewardFn RewardFn::observed(std::shared_ptr<const RewardOracleHandle> handle) {
  if (!handle) throw std::invalid_argument("RewardFn::observed: null handle");
  const int S = handle->num_states();
  const int A = handle->num_actions();
  return RewardFn(Kind::kObserved, S, A, [handle](int s, int a) {
    return handle->observe(s, a);
  });
}

RewardFn RewardFn::neural(int num_states, int num_actions,
                          std::function<double(int, int)> rule) {
  return RewardFn(Kind::kNeural, num_states, num_actions, std::move(rule));
}

std::vector<double> RewardFn::materialize() const {
  std::vector<double> out(static_cast<std::size_t>(num_states_) * num_actions_);
  for (int s = 0; s < num_states_; ++s) {
    for (int a = 0; a < num_actions_; ++a) {
      out[static_cast<std::size_t>(s) * num_actions_ + a] = rule_(s, a);
    }
  }
  return out;
}

}  // namespace pgrlhf
