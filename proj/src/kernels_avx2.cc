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

// AVX2 + FMA variants. This translation unit is compiled with -mavx2 -mfma
// and must only be entered after a runtime CPU check (see kernels.cc).

#include "kernels_internal.hpp"

#if defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>

namespace pgrlhf::kernels::avx2 {
namespace {

inline double horizontal_sum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d sum2 = _mm_add_pd(lo, hi);
  const __m128d shuf = _mm_unpackhi_pd(sum2, sum2);
  return _mm_cvtsd_f64(_mm_add_sd(sum2, shuf));
}

}  // namespace

double dot(const double* x, const double* y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i),
                           acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4),
                           _mm256_loadu_pd(y + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i),
                           acc0);
  }
  double acc = horizontal_sum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

double squared_norm(const double* x, std::size_t n) { return dot(x, x, n); }

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d a = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d yv = _mm256_loadu_pd(y + i);
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(a, _mm256_loadu_pd(x + i), yv));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void scale(double alpha, double* x, std::size_t n) {
  const __m256d a = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(x + i, _mm256_mul_pd(a, _mm256_loadu_pd(x + i)));
  }
  for (; i < n; ++i) x[i] *= alpha;
}

void rank1_update(double weight, const double* v, double* matrix,
                  std::size_t d) {
  for (std::size_t r = 0; r < d; ++r) {
    const double wr = weight * v[r];
    if (wr == 0.0) continue;
    axpy(wr, v, matrix + r * d, d);
  }
}

void gemv(const double* a, std::size_t rows, std::size_t cols,
          const double* x, double* y) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = dot(a + r * cols, x, cols);
}

void gemv_transposed_accumulate(const double* a, std::size_t rows,
                                std::size_t cols, const double* r,
                                double* y) {
  for (std::size_t i = 0; i < rows; ++i) {
    if (r[i] == 0.0) continue;
    axpy(r[i], a + i * cols, y, cols);
  }
}

}  // namespace pgrlhf::kernels::avx2

#else

// Non-x86 builds: the symbols still exist so the dispatcher links, but
// isa_available(kAvx2) is false and they are never called.
namespace pgrlhf::kernels::avx2 {
double dot(const double* x, const double* y, std::size_t n) {
  return scalar::dot(x, y, n);
}
double squared_norm(const double* x, std::size_t n) {
  return scalar::squared_norm(x, n);
}
void axpy(double alpha, const double* x, double* y, std::size_t n) {
  scalar::axpy(alpha, x, y, n);
}
void scale(double alpha, double* x, std::size_t n) {
  scalar::scale(alpha, x, n);
}
void rank1_update(double weight, const double* v, double* matrix,
                  std::size_t d) {
  scalar::rank1_update(weight, v, matrix, d);
}
void gemv(const double* a, std::size_t rows, std::size_t cols,
          const double* x, double* y) {
  scalar::gemv(a, rows, cols, x, y);
}
void gemv_transposed_accumulate(const double* a, std::size_t rows,
                                std::size_t cols, const double* r,
                                double* y) {
  scalar::gemv_transposed_accumulate(a, rows, cols, r, y);
}
}  // namespace pgrlhf::kernels::avx2

#endif
