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
#include <vector>

#include "doctest.h"
#include "pgrlhf/rng.hpp"

using pgrlhf::Rng;

TEST_CASE("same seed and stream give the same sequence") {
  Rng a = pgrlhf::seeded_rng(7, 3);
  Rng b = pgrlhf::seeded_rng(7, 3);
  for (int i = 0; i < 1000; ++i) REQUIRE(a.next_u64() == b.next_u64());
  Rng c = pgrlhf::seeded_rng(7, 4);
  Rng d = pgrlhf::seeded_rng(8, 3);
  Rng e = pgrlhf::seeded_rng(7, 3);
  const auto first = e.next_u64();
  CHECK(c.next_u64() != first);
  CHECK(d.next_u64() != first);
}

TEST_CASE("split does not depend on draws already made") {
  Rng a(11, 0);
  Rng b(11, 0);
  for (int i = 0; i < 57; ++i) b.next_u64();
  Rng ca = a.split(5);
  Rng cb = b.split(5);
  for (int i = 0; i < 100; ++i) REQUIRE(ca.next_u64() == cb.next_u64());
}

TEST_CASE("uniform and index ranges") {
  Rng rng(1, 1);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    REQUIRE(rng.index(7) < 7u);
  }
}

TEST_CASE("index is uniform by chi-square") {
  Rng rng(2024, 9);
  const int bins = 10;
  const int n = 100000;
  std::vector<int> count(bins, 0);
  for (int i = 0; i < n; ++i) ++count[rng.index(bins)];
  double chi2 = 0.0;
  const double expect = static_cast<double>(n) / bins;
  for (int c : count) chi2 += (c - expect) * (c - expect) / expect;
  // 9 degrees of freedom; 0.999 quantile is 27.88.
  CHECK(chi2 < 27.88);
}

TEST_CASE("categorical follows unnormalized weights") {
  Rng rng(3, 0);
  const std::vector<double> w = {1.0, 0.0, 3.0};
  std::vector<int> count(3, 0);
  const int n = 200000;
  for (int i = 0; i < n; ++i) ++count[rng.categorical(w)];
  CHECK(count[1] == 0);
  const double p2 = static_cast<double>(count[2]) / n;
  CHECK(std::abs(p2 - 0.75) < 4 * std::sqrt(0.75 * 0.25 / n));
}

TEST_CASE("from_cdf and normal moments") {
  Rng rng(4, 0);
  const std::vector<double> cdf = {0.2, 0.5, 1.0};
  std::vector<int> count(3, 0);
  const int n = 100000;
  double sum = 0, sq = 0;
  for (int i = 0; i < n; ++i) {
    ++count[rng.from_cdf(cdf)];
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  CHECK(std::abs(count[0] / double(n) - 0.2) < 0.01);
  CHECK(std::abs(count[2] / double(n) - 0.5) < 0.01);
  CHECK(std::abs(sum / n) < 0.02);
  CHECK(std::abs(sq / n - 1.0) < 0.02);
}

TEST_CASE("splitmix64 reference value") {
  // First output of the reference SplitMix64 generator seeded with 0.
  CHECK(pgrlhf::splitmix64(0) == 0xE220A8397B1DCDAFULL);
}
