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

#include "pgrlhf/preference.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "json.hpp"

namespace pgrlhf {

double bt_preference_probability(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

PreferenceOracle::PreferenceOracle(
    std::shared_ptr<const RewardOracleHandle> truth)
    : truth_(std::move(truth)) {
  if (!truth_) throw std::invalid_argument("PreferenceOracle: null reward");
}

PreferenceRecord PreferenceOracle::compare(Trajectory tau1, Trajectory tau2,
                                           Rng& rng) {
  double diff = 0.0;
  {
    RewardOracleHandle::PreferenceScope scope;
    for (const auto& st : tau1.steps) diff += truth_->observe(st.state, st.action);
    for (const auto& st : tau2.steps) diff -= truth_->observe(st.state, st.action);
  }
  queries_.fetch_add(1, std::memory_order_relaxed);
  PreferenceRecord rec;
  rec.y = rng.bernoulli(bt_preference_probability(diff)) ? 1 : 0;
  rec.tau1 = std::move(tau1);
  rec.tau2 = std::move(tau2);
  return rec;
}

HfPhasePlan::HfPhasePlan(int phase, std::vector<Policy> history,
                         Policy baseline, int budget)
    : phase_(phase),
      history_(std::move(history)),
      baseline_(std::move(baseline)),
      budget_(budget) {
  if (phase < 0) throw std::invalid_argument("HfPhasePlan: negative phase");
  if (budget <= 0) throw std::invalid_argument("HfPhasePlan: budget must be > 0");
  if (history_.size() < static_cast<std::size_t>(phase) + 1) {
    throw std::invalid_argument("HfPhasePlan: history needs pi^0..pi^n");
  }
}

Trajectory HfPhasePlan::draw_first(Simulator& sim, Rng& rng) const {
  if (phase_ == 0) return sim.rollout(history_[0], StartSpec::initial(), rng);
  const std::size_t i = 1 + rng.index(static_cast<std::uint64_t>(phase_));
  return sim.rollout_from_cover(std::span<const Policy>(history_.data(), i),
                                history_[i], rng);
}

Trajectory HfPhasePlan::draw_second(Simulator& sim, Rng& rng) const {
  return sim.rollout(baseline_, StartSpec::initial(), rng);
}

std::vector<PreferenceRecord> collect_phase_feedback(const HfPhasePlan& plan,
                                                     Simulator& sim,
                                                     PreferenceOracle& oracle,
                                                     Rng& rng) {
  std::vector<PreferenceRecord> records;
  records.reserve(static_cast<std::size_t>(plan.budget()));
  for (int i = 0; i < plan.budget(); ++i) {
    Trajectory tau1 = plan.draw_first(sim, rng);
    Trajectory tau2 = plan.draw_second(sim, rng);
    records.push_back(oracle.compare(std::move(tau1), std::move(tau2), rng));
  }
  return records;
}

Policy default_baseline_policy(const TabularMdp& mdp) {
  return Policy::uniform(mdp.num_states(), mdp.num_actions());
}

BaselineCoverage baseline_coverage_diagnostic(const TabularMdp& mdp,
                                              const FeatureMap& features,
                                              const Policy& policy,
                                              const Policy& baseline,
                                              int num_pairs, Rng& rng) {
  if (num_pairs <= 0) {
    throw std::invalid_argument("baseline_coverage_diagnostic: num_pairs <= 0");
  }
  const int d = features.dimension();
  Eigen::MatrixXd diff_moment = Eigen::MatrixXd::Zero(d, d);
  Eigen::MatrixXd base_moment = Eigen::MatrixXd::Zero(d, d);
  for (int i = 0; i < num_pairs; ++i) {
    const int s = static_cast<int>(rng.index(mdp.num_states()));
    const int a = static_cast<int>(rng.index(mdp.num_actions()));
    const Trajectory t1 =
        sample_discounted_trajectory(mdp, policy, StartSpec::at(s, a), rng);
    const Trajectory t2 =
        sample_discounted_trajectory(mdp, baseline, StartSpec::initial(), rng);
    const Eigen::VectorXd x2 = trajectory_feature_sum(features, t2);
    const Eigen::VectorXd dx = trajectory_feature_sum(features, t1) - x2;
    diff_moment.noalias() += dx * dx.transpose();
    base_moment.noalias() += x2 * x2.transpose();
  }
  diff_moment /= num_pairs;
  base_moment /= num_pairs;

  BaselineCoverage out;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> base_eig(base_moment);
  const Eigen::VectorXd& lam = base_eig.eigenvalues();
  out.max_eig_baseline = lam.maxCoeff();
  out.min_eig_difference =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(diff_moment,
                                                     Eigen::EigenvaluesOnly)
          .eigenvalues()
          .minCoeff();
  const double cut = 1e-10 * std::max(1.0, out.max_eig_baseline);
  std::vector<int> keep;
  for (int k = 0; k < d; ++k) {
    if (lam(k) > cut) keep.push_back(k);
  }
  out.support_rank = static_cast<int>(keep.size());
  if (keep.empty()) return out;
  // Whitened D restricted to range(B).
  Eigen::MatrixXd w(d, keep.size());
  for (std::size_t j = 0; j < keep.size(); ++j) {
    w.col(j) = base_eig.eigenvectors().col(keep[j]) / std::sqrt(lam(keep[j]));
  }
  const Eigen::MatrixXd whitened = w.transpose() * diff_moment * w;
  out.ratio = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(
                  whitened, Eigen::EigenvaluesOnly)
                  .eigenvalues()
                  .minCoeff();
  return out;
}

namespace {

nlohmann::json encode(const Trajectory& tau, int num_actions) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& st : tau.steps) j.push_back(st.state * num_actions + st.action);
  return j;
}

Trajectory decode(const nlohmann::json& j, int num_actions) {
  Trajectory tau;
  for (const auto& v : j) {
    const int idx = v.get<int>();
    if (idx < 0) throw std::invalid_argument("preference JSONL: negative index");
    tau.steps.push_back({idx / num_actions, idx % num_actions});
  }
  if (tau.steps.empty()) {
    throw std::invalid_argument("preference JSONL: empty trajectory");
  }
  return tau;
}

}  // namespace

void write_preferences_jsonl(std::ostream& out,
                             std::span<const PreferenceRecord> records,
                             int num_actions) {
  for (const auto& r : records) {
    nlohmann::json j;
    j["tau1"] = encode(r.tau1, num_actions);
    j["tau2"] = encode(r.tau2, num_actions);
    j["y"] = r.y;
    out << j.dump() << '\n';
  }
}

std::vector<PreferenceRecord> read_preferences_jsonl(std::istream& in,
                                                     int num_actions) {
  if (num_actions <= 0) {
    throw std::invalid_argument("read_preferences_jsonl: num_actions <= 0");
  }
  std::vector<PreferenceRecord> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      PreferenceRecord r;
      r.tau1 = decode(j.at("tau1"), num_actions);
      r.tau2 = decode(j.at("tau2"), num_actions);
      r.y = j.at("y").get<int>();
      if (r.y != 0 && r.y != 1) throw std::invalid_argument("label not in {0,1}");
      out.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw std::invalid_argument("preference JSONL line " +
                                  std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace pgrlhf
