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

#ifndef PGRLHF_RNG_HPP_
#define PGRLHF_RNG_HPP_

#include <cstdint>
#include <random>
#include <span>

namespace pgrlhf {

// Deterministic random stream.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard. Its seed is derived from (base seed, stream id) with two rounds
// of SplitMix64. All derived draws (uniform reals, bounded integers,
// categorical and normal variates) are computed here rather than through
// <random> distributions, whose algorithms are implementation-defined, so a
// given (seed, stream) produces the same numbers on every platform.
class Rng {
 public:
  Rng(std::uint64_t base_seed, std::uint64_t stream_id);

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n). n must be positive.
  std::uint64_t index(std::uint64_t n) {
    const unsigned __int128 product =
        static_cast<unsigned __int128>(engine_()) * n;
    return static_cast<std::uint64_t>(product >> 64);
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Draws an index from an unnormalized nonnegative weight vector by
  // inverse-CDF search. Weights need not sum to one.
  std::size_t categorical(std::span<const double> weights);

  // Draws an index from a cumulative distribution (last entry ~ 1).
  std::size_t from_cdf(std::span<const double> cdf);

  // Standard normal via Box-Muller (one value per call).
  double normal();

  // Child stream; deterministic in (this stream's seed, child id) and
  // independent of how many draws this stream has made.
  Rng split(std::uint64_t child_id) const;

  std::uint64_t seed() const { return seed_; }

 private:
  explicit Rng(std::uint64_t mixed_seed);

  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

// Stream `stream_id` under `base_seed`.
Rng seeded_rng(std::uint64_t base_seed, std::uint64_t stream_id);

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace pgrlhf

#endif  // PGRLHF_RNG_HPP_
