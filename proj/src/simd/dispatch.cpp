// Copyright 2026 The semback Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <atomic>
#include <cstdlib>
#include <string>
#include <string_view>

#include "semback/error.hpp"
#include "semback/simd/kernels.hpp"

namespace semback::simd {

namespace {

constexpr KernelTable kScalarTable{scalar::dot, scalar::axpy, scalar::affine,
                                   scalar::affine_transpose, scalar::outer_accumulate};

#if defined(SEMBACK_HAVE_AVX2)
constexpr KernelTable kAvx2Table{avx2::dot, avx2::axpy, avx2::affine, avx2::affine_transpose,
                                 avx2::outer_accumulate};
#endif

bool cpu_has_avx2() noexcept {
#if defined(SEMBACK_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend initial_backend() {
  Backend best = cpu_has_avx2() ? Backend::Avx2 : Backend::Scalar;
  if (const char* env = std::getenv("SEMBACK_KERNELS")) {
    const std::string_view name(env);
    if (name == "scalar") return Backend::Scalar;
    if (name == "avx2" && best == Backend::Avx2) return Backend::Avx2;
  }
  return best;
}

std::atomic<const KernelTable*>& active_table() {
  static std::atomic<const KernelTable*> table{&kernels(initial_backend())};
  return table;
}

}  // namespace

bool backend_supported(Backend backend) noexcept {
  switch (backend) {
    case Backend::Scalar:
      return true;
    case Backend::Avx2:
      return cpu_has_avx2();
  }
  return false;
}

std::string_view backend_name(Backend backend) noexcept {
  return backend == Backend::Avx2 ? "avx2" : "scalar";
}

const KernelTable& kernels(Backend backend) {
  if (backend == Backend::Scalar) return kScalarTable;
#if defined(SEMBACK_HAVE_AVX2)
  if (cpu_has_avx2()) return kAvx2Table;
#endif
  throw Error("kernel backend '" + std::string(backend_name(backend)) + "' is not available");
}

const KernelTable& kernels() noexcept { return *active_table().load(std::memory_order_relaxed); }

Backend active_backend() noexcept {
  return &kernels() == &kScalarTable ? Backend::Scalar : Backend::Avx2;
}

void set_backend(Backend backend) { active_table().store(&kernels(backend)); }

}  // namespace semback::simd
