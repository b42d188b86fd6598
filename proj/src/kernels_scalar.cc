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

#include "kernels_internal.hpp"

namespace pgrlhf::kernels::scalar {

double dot(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

double squared_norm(const double* x, std::size_t n) { return dot(x, x, n); }

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scale(double alpha, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
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

}  // namespace pgrlhf::kernels::scalar
