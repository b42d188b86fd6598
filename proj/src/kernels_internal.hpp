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

#ifndef PGRLHF_SRC_KERNELS_INTERNAL_HPP_
#define PGRLHF_SRC_KERNELS_INTERNAL_HPP_

#include <cstddef>

namespace pgrlhf::kernels {

namespace scalar {
double dot(const double* x, const double* y, std::size_t n);
double squared_norm(const double* x, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void scale(double alpha, double* x, std::size_t n);
void rank1_update(double weight, const double* v, double* matrix,
                  std::size_t d);
void gemv(const double* a, std::size_t rows, std::size_t cols,
          const double* x, double* y);
void gemv_transposed_accumulate(const double* a, std::size_t rows,
                                std::size_t cols, const double* r, double* y);
}  // namespace scalar

namespace avx2 {
double dot(const double* x, const double* y, std::size_t n);
double squared_norm(const double* x, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void scale(double alpha, double* x, std::size_t n);
void rank1_update(double weight, const double* v, double* matrix,
                  std::size_t d);
void gemv(const double* a, std::size_t rows, std::size_t cols,
          const double* x, double* y);
void gemv_transposed_accumulate(const double* a, std::size_t rows,
                                std::size_t cols, const double* r, double* y);
}  // namespace avx2

}  // namespace pgrlhf::kernels

#endif  // PGRLHF_SRC_KERNELS_INTERNAL_HPP_
