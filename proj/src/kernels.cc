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

#include "pgrlhf/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "kernels_internal.hpp"

namespace pgrlhf::kernels {
namespace {

constexpr KernelTable kScalarTable{
    &scalar::dot,  &scalar::squared_norm, &scalar::axpy,
    &scalar::scale, &scalar::rank1_update, &scalar::gemv,
    &scalar::gemv_transposed_accumulate,
};

constexpr KernelTable kAvx2Table{
    &avx2::dot,  &avx2::squared_norm, &avx2::axpy,
    &avx2::scale, &avx2::rank1_update, &avx2::gemv,
    &avx2::gemv_transposed_accumulate,
};

bool cpu_has_avx2() {
#if defined(PGRLHF_HAVE_AVX2_TU) && (defined(__x86_64__) || defined(__i386__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa initial_isa() {
  // PGRLHF_ISA=scalar pins the reference kernels.
  if (const char* env = std::getenv("PGRLHF_ISA")) {
    if (std::string(env) == "scalar") return Isa::kScalar;
  }
  return cpu_has_avx2() ? Isa::kAvx2 : Isa::kScalar;
}

std::atomic<const KernelTable*>& active_table() {
  static std::atomic<const KernelTable*> table{
      initial_isa() == Isa::kAvx2 ? &kAvx2Table : &kScalarTable};
  return table;
}

const KernelTable& current() {
  return *active_table().load(std::memory_order_relaxed);
}

void check_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw std::invalid_argument(std::string("kernels::") + what +
                                ": size mismatch (" + std::to_string(a) +
                                " vs " + std::to_string(b) + ")");
  }
}

}  // namespace

std::string_view isa_name(Isa isa) {
  return isa == Isa::kAvx2 ? "avx2" : "scalar";
}

bool isa_available(Isa isa) {
  if (isa == Isa::kScalar) return true;
  static const bool avx2 = cpu_has_avx2();
  return avx2;
}

Isa active_isa() {
  return &current() == &kAvx2Table ? Isa::kAvx2 : Isa::kScalar;
}

void set_active_isa(Isa isa) {
  if (!isa_available(isa)) {
    throw std::invalid_argument("ISA not available: " +
                                std::string(isa_name(isa)));
  }
  active_table().store(&table_for(isa), std::memory_order_relaxed);
}

const KernelTable& scalar_table() { return kScalarTable; }
const KernelTable& avx2_table() { return kAvx2Table; }
const KernelTable& table_for(Isa isa) {
  return isa == Isa::kAvx2 ? kAvx2Table : kScalarTable;
}

double dot(std::span<const double> x, std::span<const double> y) {
  check_same_size(x.size(), y.size(), "dot");
  return current().dot(x.data(), y.data(), x.size());
}

double squared_norm(std::span<const double> x) {
  return current().squared_norm(x.data(), x.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  check_same_size(x.size(), y.size(), "axpy");
  current().axpy(alpha, x.data(), y.data(), x.size());
}

void scale(double alpha, std::span<double> x) {
  current().scale(alpha, x.data(), x.size());
}

void rank1_update(double weight, std::span<const double> v,
                  std::span<double> matrix) {
  check_same_size(v.size() * v.size(), matrix.size(), "rank1_update");
  current().rank1_update(weight, v.data(), matrix.data(), v.size());
}

void gemv(std::span<const double> a, std::size_t rows, std::size_t cols,
          std::span<const double> x, std::span<double> y) {
  check_same_size(a.size(), rows * cols, "gemv");
  check_same_size(x.size(), cols, "gemv");
  check_same_size(y.size(), rows, "gemv");
  current().gemv(a.data(), rows, cols, x.data(), y.data());
}

void gemv_transposed_accumulate(std::span<const double> a, std::size_t rows,
                                std::size_t cols, std::span<const double> r,
                                std::span<double> y) {
  check_same_size(a.size(), rows * cols, "gemv_transposed_accumulate");
  check_same_size(r.size(), rows, "gemv_transposed_accumulate");
  check_same_size(y.size(), cols, "gemv_transposed_accumulate");
  current().gemv_transposed_accumulate(a.data(), rows, cols, r.data(),
                                       y.data());
}

}  // namespace pgrlhf::kernels
