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

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "pgrlhf/harness.hpp"

namespace pgrlhf {
namespace {

std::string num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace

void write_run_csv(std::ostream& out, const RunReport& r) {
  out << "phase,value,suboptimality,trajectories,transitions,truncated,"
         "formula_trajectories,queries,true_reward_reads,known_states,"
         "bonused_pairs,max_theta_norm,mle_nll,mle_iterations,mle_pg_norm,"
         "mle_error,epsilon_hf,potential_mean,potential_cumulative\n";
  for (const auto& p : r.phases) {
    out << p.phase << ',' << num(p.value) << ',' << num(p.suboptimality) << ','
        << p.trajectories << ',' << p.transitions << ',' << p.truncated << ','
        << p.formula_trajectories << ',' << p.queries << ','
        << p.true_reward_reads << ',' << p.known_states << ','
        << p.bonused_pairs << ',' << num(p.max_theta_norm) << ','
        << num(p.mle_nll) << ',' << p.mle_iterations << ','
        << num(p.mle_pg_norm) << ',' << num(p.mle_error) << ','
        << num(p.epsilon_hf) << ',' << num(p.potential_mean) << ','
        << num(p.potential_cumulative) << '\n';
  }
}

void write_aggregate_csv(std::ostream& out, const ExperimentSummary& s) {
  out << "phase,runs,mean_suboptimality,ci_low,ci_high\n";
  for (std::size_t n = 0; n < s.per_phase.size(); ++n) {
    const auto& i = s.per_phase[n];
    out << n << ',' << s.runs.size() << ',' << num(i.mean) << ','
        << num(i.low) << ',' << num(i.high) << '\n';
  }
}

void write_accounting_csv(std::ostream& out,
                          const std::vector<AccountingRow>& rows) {
  out << "algorithm,trajectories,formula_trajectories,transitions,"
         "transitions_per_trajectory,true_reward_observations,"
         "true_reward_reads,queries\n";
  for (const auto& a : rows) {
    out << a.algorithm << ',' << a.trajectories << ','
        << a.formula_trajectories << ',' << a.transitions << ','
        << num(a.transitions_per_trajectory) << ','
        << a.true_reward_observations << ',' << a.true_reward_reads << ','
        << a.queries << '\n';
  }
}

void write_curve_svg(std::ostream& out, const ExperimentSummary& s) {
  const double w = 640, h = 400, pad = 50;
  const std::size_t n = s.per_phase.size();
  auto x = [&](std::size_t i) {
    return pad + (n <= 1 ? 0.0 : (w - 2 * pad) * static_cast<double>(i) / (n - 1));
  };
  auto y = [&](double v) {
    v = std::min(1.0, std::max(0.0, std::isfinite(v) ? v : 0.0));
    return h - pad - (h - 2 * pad) * v;
  };
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w
      << "\" height=\"" << h << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<line x1=\"" << pad << "\" y1=\"" << h - pad << "\" x2=\"" << w - pad
      << "\" y2=\"" << h - pad << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << pad << "\" y1=\"" << pad << "\" x2=\"" << pad
      << "\" y2=\"" << h - pad << "\" stroke=\"black\"/>\n";
  // CI band.
  out << "<polygon fill=\"#9ecae1\" stroke=\"none\" points=\"";
  for (std::size_t i = 0; i < n; ++i) out << x(i) << ',' << y(s.per_phase[i].high) << ' ';
  for (std::size_t i = n; i-- > 0;) out << x(i) << ',' << y(s.per_phase[i].low) << ' ';
  out << "\"/>\n<polyline fill=\"none\" stroke=\"#08519c\" stroke-width=\"2\" points=\"";
  for (std::size_t i = 0; i < n; ++i) out << x(i) << ',' << y(s.per_phase[i].mean) << ' ';
  out << "\"/>\n";
  out << "<text x=\"" << w / 2 << "\" y=\"" << h - 12
      << "\" text-anchor=\"middle\" font-size=\"13\">phase</text>\n";
  out << "<text x=\"14\" y=\"" << h / 2
      << "\" font-size=\"13\" transform=\"rotate(-90 14 " << h / 2
      << ")\" text-anchor=\"middle\">normalized suboptimality</text>\n";
  out << "<text x=\"" << pad - 6 << "\" y=\"" << y(1.0) + 4
      << "\" text-anchor=\"end\" font-size=\"11\">1</text>\n";
  out << "<text x=\"" << pad - 6 << "\" y=\"" << y(0.0) + 4
      << "\" text-anchor=\"end\" font-size=\"11\">0</text>\n";
  out << "<text x=\"" << w / 2 << "\" y=\"24\" text-anchor=\"middle\" "
         "font-size=\"14\">"
      << algorithm_name(s.config.algorithm) << " (" << s.runs.size()
      << " runs, 95% CI)</text>\n";
  out << "</svg>\n";
}

void write_text_file(const std::string& dir, const std::string& name,
                     const std::string& contents) {
  const std::filesystem::path d(dir);
  std::error_code ec;
  std::filesystem::create_directories(d, ec);
  if (ec) {
    throw std::runtime_error("cannot create directory '" + d.string() +
                             "': " + ec.message());
  }
  const auto path = d / name;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << contents;
  out.flush();
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

}  // namespace pgrlhf
