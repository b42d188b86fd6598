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
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "pgrlhf/kernels.hpp"
#include "pgrlhf/rng.hpp"

namespace k = pgrlhf::kernels;

namespace {

std::vector<double> random_vec(pgrlhf::Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

double max_rel_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double scale = std::max(1.0, std::abs(a[i]));
    worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
  }
  return worst;
}

}  // namespace

TEST_CASE("scalar kernels on a hand example") {
  const auto& t = k::scalar_table();
  const double x[] = {1, 2, 3};
  const double y[] = {4, -5, 6};
  CHECK(t.dot(x, y, 3) == doctest::Approx(12.0));
  CHECK(t.squared_norm(x, 3) == doctest::Approx(14.0));
  double z[] = {1, 1, 1};
  t.axpy(2.0, x, z, 3);
  CHECK(z[2] == doctest::Approx(7.0));
  double m[4] = {0, 0, 0, 0};
  const double v[] = {1, 2};
  t.rank1_update(0.5, v, m, 2);
  CHECK(m[0] == doctest::Approx(0.5));
  CHECK(m[1] == doctest::Approx(1.0));
  CHECK(m[2] == doctest::Approx(1.0));
  CHECK(m[3] == doctest::Approx(2.0));
  const double a[] = {1, 2, 3, 4, 5, 6};  // 2 x 3
  double out[2];
  t.gemv(a, 2, 3, x, out);
  CHECK(out[0] == doctest::Approx(14.0));
  CHECK(out[1] == doctest::Approx(32.0));
  double acc[3] = {0, 0, 0};
  const double r[] = {1, -1};
  t.gemv_transposed_accumulate(a, 2, 3, r, acc);
  CHECK(acc[0] == doctest::Approx(-3.0));
  CHECK(acc[2] == doctest::Approx(-3.0));
}

TEST_CASE("AVX2 kernels match the scalar reference") {
  if (!k::isa_available(k::Isa::kAvx2)) {
    MESSAGE("AVX2 not available on this machine; equivalence skipped");
    CHECK_THROWS_AS(k::set_active_isa(k::Isa::kAvx2), std::invalid_argument);
    return;
  }
  const auto& s = k::scalar_table();
  const auto& v = k::avx2_table();
  pgrlhf::Rng rng(42, 0);
  // Lengths around the 4-lane boundary plus a long one.
  for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 7u, 8u, 9u, 17u, 64u, 1001u}) {
    CAPTURE(n);
    const auto x = random_vec(rng, n);
    const auto y = random_vec(rng, n);
    const double ds = s.dot(x.data(), y.data(), n);
    const double dv = v.dot(x.data(), y.data(), n);
    CHECK(std::abs(ds - dv) <= 1e-12 * std::max(1.0, std::abs(ds)) * (1 + n));
    CHECK(s.squared_norm(x.data(), n) ==
          doctest::Approx(v.squared_norm(x.data(), n)).epsilon(1e-13));

    auto ys = y, yv = y;
    s.axpy(0.37, x.data(), ys.data(), n);
    v.axpy(0.37, x.data(), yv.data(), n);
    CHECK(max_rel_diff(ys, yv) <= 1e-14);

    auto xs = x, xv = x;
    s.scale(-1.7, xs.data(), n);
    v.scale(-1.7, xv.data(), n);
    CHECK(max_rel_diff(xs, xv) == 0.0);
  }
  for (std::size_t d : {1u, 3u, 6u, 13u}) {
    CAPTURE(d);
    const auto vec = random_vec(rng, d);
    std::vector<double> ms(d * d, 0.5), mv(d * d, 0.5);
    s.rank1_update(0.8, vec.data(), ms.data(), d);
    v.rank1_update(0.8, vec.data(), mv.data(), d);
    CHECK(max_rel_diff(ms, mv) <= 1e-14);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j)
        CHECK(mv[i * d + j] == doctest::Approx(mv[j * d + i]).epsilon(1e-14));

    const std::size_t rows = d + 2;
    const auto a = random_vec(rng, rows * d);
    std::vector<double> gs(rows), gv(rows);
    s.gemv(a.data(), rows, d, vec.data(), gs.data());
    v.gemv(a.data(), rows, d, vec.data(), gv.data());
    CHECK(max_rel_diff(gs, gv) <= 1e-12);

    const auto r = random_vec(rng, rows);
    std::vector<double> ts(d, 1.0), tv(d, 1.0);
    s.gemv_transposed_accumulate(a.data(), rows, d, r.data(), ts.data());
    v.gemv_transposed_accumulate(a.data(), rows, d, r.data(), tv.data());
    CHECK(max_rel_diff(ts, tv) <= 1e-12);
  }
}

TEST_CASE("dispatch override switches the active table") {
  const auto before = k::active_isa();
  k::set_active_isa(k::Isa::kScalar);
  CHECK(k::active_isa() == k::Isa::kScalar);
  const std::vector<double> x = {1, 2, 3, 4, 5};
  CHECK(k::dot(x, x) == doctest::Approx(55.0));
  CHECK(k::isa_name(k::Isa::kScalar) == "scalar");
  k::set_active_isa(before);
}
