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

#ifndef PGRLHF_KERNELS_HPP_
#define PGRLHF_KERNELS_HPP_

// Dense double-precision kernels used by the inner loops (feature dot
// products, SGD updates, covariance accumulation, batched logistic
// gradients). Every kernel has a portable scalar reference implementation
// and, on x86-64, an AVX2/FMA variant. The variant is chosen once at
// runtime from CPUID and can be overridden for testing or reproducibility.
//
// Matrices are row-major and passed as flat spans with explicit shape.

#include <cstddef>
#include <span>
#include <string_view>

namespace pgrlhf::kernels {

enum class Isa { kScalar, kAvx2 };

std::string_view isa_name(Isa isa);

// True when the CPU supports the instructions `isa` needs and the variant
// was compiled in.
bool isa_available(Isa isa);

// ISA currently used by the dispatching entry points below.
Isa active_isa();

// Overrides the dispatch target. Throws std::invalid_argument when `isa` is
// not available on this machine.
void set_active_isa(Isa isa);

// Dispatching entry points.
double dot(std::span<const double> x, std::span<const double> y);
double squared_norm(std::span<const double> x);
// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);
// x *= alpha
void scale(double alpha, std::span<double> x);
// matrix(d x d) += weight * v v^T, full (both triangles) update.
void rank1_update(double weight, std::span<const double> v,
                  std::span<double> matrix);
// y = A x, A is rows x cols.
void gemv(std::span<const double> a, std::size_t rows, std::size_t cols,
          std::span<const double> x, std::span<double> y);
// y += A^T r, A is rows x cols.
void gemv_transposed_accumulate(std::span<const double> a, std::size_t rows,
                                std::size_t cols, std::span<const double> r,
                                std::span<double> y);

// Variant-specific implementations, exposed for equivalence testing.
struct KernelTable {
  double (*dot)(const double*, const double*, std::size_t);
  double (*squared_norm)(const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  void (*scale)(double, double*, std::size_t);
  void (*rank1_update)(double, const double*, double*, std::size_t);
  void (*gemv)(const double*, std::size_t, std::size_t, const double*,
               double*);
  void (*gemv_transposed_accumulate)(const double*, std::size_t, std::size_t,
                                     const double*, double*);
};

const KernelTable& scalar_table();
// Only valid when isa_available(Isa::kAvx2).
const KernelTable& avx2_table();
const KernelTable& table_for(Isa isa);

}  // namespace pgrlhf::kernels

#endif  // PGRLHF_KERNELS_HPP_
