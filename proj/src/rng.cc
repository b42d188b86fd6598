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

#include "pgrlhf/rng.hpp"

#include <cmath>
#include <numbers>

namespace pgrlhf {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

Rng::Rng(std::uint64_t mixed_seed) : seed_(mixed_seed), engine_(mixed_seed) {}

Rng::Rng(std::uint64_t base_seed, std::uint64_t stream_id)
    : Rng(splitmix64(splitmix64(base_seed) ^
                     splitmix64(stream_id + 0xD1B54A32D192ED03ULL))) {}

std::size_t Rng::categorical(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  const double u = uniform() * total;
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    acc += weights[i];
    last_positive = i;
    if (u < acc) return i;
  }
  return last_positive;
}

std::size_t Rng::from_cdf(std::span<const double> cdf) {
  const double u = uniform() * cdf.back();
  std::size_t i = 0;
  while (i + 1 < cdf.size() && !(u < cdf[i])) ++i;
  return i;
}

double Rng::normal() {
  // 1 - uniform() lies in (0, 1], so the log is finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

Rng Rng::split(std::uint64_t child_id) const {
  return Rng(splitmix64(seed_ ^ splitmix64(child_id + 0x2545F4914F6CDD1DULL)));
}

Rng seeded_rng(std::uint64_t base_seed, std::uint64_t stream_id) {
  return Rng(base_seed, stream_id);
}

}  // namespace pgrlhf
