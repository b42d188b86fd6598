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

#include "pgrlhf/reward_mle.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "pgrlhf/kernels.hpp"

namespace pgrlhf {
namespace {

std::span<const double> as_span(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

}  // namespace

MleProblem::MleProblem(RowMatrix differences, Eigen::VectorXd labels,
                       double radius)
    : differences_(std::move(differences)),
      labels_(std::move(labels)),
      radius_(radius) {
  if (differences_.rows() == 0 || differences_.cols() == 0) {
    throw std::invalid_argument("MleProblem: no records");
  }
  if (labels_.size() != differences_.rows()) {
    throw std::invalid_argument("MleProblem: label count mismatch");
  }
  for (Eigen::Index i = 0; i < labels_.size(); ++i) {
    if (labels_(i) != 0.0 && labels_(i) != 1.0) {
      throw std::invalid_argument("MleProblem: labels must be 0 or 1");
    }
  }
  if (!(radius > 0.0)) throw std::invalid_argument("MleProblem: radius <= 0");
  if (!differences_.allFinite()) {
    throw std::invalid_argument("MleProblem: non-finite feature difference");
  }
}

MleProblem MleProblem::from_records(const FeatureMap& features,
                                    std::span<const PreferenceRecord> records,
                                    double radius) {
  RowMatrix x(static_cast<Eigen::Index>(records.size()), features.dimension());
  Eigen::VectorXd y(static_cast<Eigen::Index>(records.size()));
  for (std::size_t i = 0; i < records.size(); ++i) {
    x.row(static_cast<Eigen::Index>(i)) =
        trajectory_feature_difference(features, records[i].tau1,
                                      records[i].tau2)
            .transpose();
    y(static_cast<Eigen::Index>(i)) = records[i].y;
  }
  return MleProblem(std::move(x), std::move(y), radius);
}

double MleProblem::smoothness() const {
  return differences_.rowwise().squaredNorm().mean() / 4.0;
}

double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

namespace {

Eigen::VectorXd margins(const MleProblem& p, const Eigen::VectorXd& mu) {
  if (mu.size() != p.dimension()) {
    throw std::invalid_argument("MLE: parameter dimension mismatch");
  }
  Eigen::VectorXd z(p.records());
  kernels::gemv({p.differences().data(),
                 static_cast<std::size_t>(p.differences().size())},
                static_cast<std::size_t>(p.records()),
                static_cast<std::size_t>(p.dimension()), as_span(mu),
                {z.data(), static_cast<std::size_t>(z.size())});
  return z;
}

}  // namespace

double nll(const MleProblem& problem, const Eigen::VectorXd& mu) {
  const Eigen::VectorXd z = margins(problem, mu);
  double sum = 0.0;
  for (int i = 0; i < problem.records(); ++i) {
    // y = 1: -log sigmoid(z) = softplus(-z); y = 0: softplus(z).
    sum += problem.labels()(i) == 1.0 ? softplus(-z(i)) : softplus(z(i));
  }
  return sum / problem.records();
}

Eigen::VectorXd nll_gradient(const MleProblem& problem,
                             const Eigen::VectorXd& mu) {
  Eigen::VectorXd r = margins(problem, mu);
  for (int i = 0; i < problem.records(); ++i) {
    r(i) = (bt_preference_probability(r(i)) - problem.labels()(i)) /
           problem.records();
  }
  Eigen::VectorXd g = Eigen::VectorXd::Zero(problem.dimension());
  kernels::gemv_transposed_accumulate(
      {problem.differences().data(),
       static_cast<std::size_t>(problem.differences().size())},
      static_cast<std::size_t>(problem.records()),
      static_cast<std::size_t>(problem.dimension()), as_span(r),
      {g.data(), static_cast<std::size_t>(g.size())});
  return g;
}

Eigen::VectorXd project_ball(const Eigen::VectorXd& x, double radius) {
  const double n = x.norm();
  if (n <= radius) return x;
  return x * (radius / n);
}

MleSolution solve_mle(const MleProblem& problem, const MleOptions& options) {
  if (options.step < 0.0) throw std::invalid_argument("solve_mle: step < 0");
  if (options.max_iters < 0) {
    throw std::invalid_argument("solve_mle: max_iters < 0");
  }
  MleSolution sol;
  sol.mu = Eigen::VectorXd::Zero(problem.dimension());
  const double L = problem.smoothness();
  if (L == 0.0) {
    // Every difference is zero: the objective is constant.
    sol.nll = nll(problem, sol.mu);
    sol.converged = true;
    return sol;
  }
  const double step = options.step > 0.0 ? options.step : 1.0 / L;
  const double radius = problem.radius();

  for (;;) {
    const Eigen::VectorXd g = nll_gradient(problem, sol.mu);
    if (!g.allFinite()) {
      throw std::runtime_error("solve_mle: non-finite gradient at iteration " +
                               std::to_string(sol.iterations));
    }
    Eigen::VectorXd next = project_ball(sol.mu - step * g, radius);
    sol.projected_gradient_norm = (sol.mu - next).norm() / step;
    if (sol.projected_gradient_norm <= options.grad_tol) {
      sol.converged = true;
      break;
    }
    if (sol.iterations >= options.max_iters) break;
    sol.mu = std::move(next);
    ++sol.iterations;
  }
  sol.nll = nll(problem, sol.mu);
  sol.optimality_gap_bound = sol.projected_gradient_norm * 2.0 * radius;
  return sol;
}

double mle_error_diagnostic(const Eigen::VectorXd& mu_hat,
                            const Eigen::VectorXd& mu_star,
                            const CovarianceAccumulator& sigma_hf) {
  if (mu_hat.size() != mu_star.size() ||
      mu_hat.size() != sigma_hf.dimension()) {
    throw std::invalid_argument("mle_error_diagnostic: dimension mismatch");
  }
  const Eigen::VectorXd delta = mu_hat - mu_star;
  const double q = sigma_hf.quadratic_form(as_span(delta)) +
                   sigma_hf.zeta() * delta.squaredNorm();
  return std::sqrt(std::max(0.0, q));
}

double c_mle(double x) { return 1.0 / (2.0 + 2.0 * std::cosh(2.0 * x)); }

double epsilon_hf(int dimension, double delta_prime, double c, int m_hf,
                  double zeta_hf, double w_mu, int phase) {
  if (phase < 1 || m_hf < 1 || !(c >= 0.0) || !(delta_prime > 0.0)) {
    throw std::invalid_argument("epsilon_hf: invalid arguments");
  }
  // c underflows to 0 once W_tau * W_mu exceeds ~355; the envelope is then
  // vacuous.
  if (c == 0.0) return std::numeric_limits<double>::infinity();
  const double a = (dimension + std::log(1.0 / delta_prime)) / (c * c * m_hf);
  const double b = zeta_hf * w_mu * w_mu / phase;
  return 8.0 * std::sqrt(a + b);
}

}  // namespace pgrlhf
