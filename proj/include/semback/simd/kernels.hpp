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

#pragma once

// Dense double-precision kernels behind the network engine and the distance
// code. Each kernel has a portable scalar reference and, on x86-64, an
// AVX2/FMA variant. The variant is picked once at startup from the CPU
// features (overridable with SEMBACK_KERNELS=scalar|avx2) and can be switched
// explicitly by tests. Switching while other threads run kernels is not
// supported.

#include <cstddef>
#include <span>
#include <string_view>

namespace semback::simd {

enum class Backend { Scalar, Avx2 };

struct KernelTable {
  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // y[r] = bias[r] + sum_c w[r * cols + c] * x[c]
  void (*affine)(const double* w, const double* bias, const double* x, double* y,
                 std::size_t rows, std::size_t cols);
  // out[c] += sum_r g[r] * w[r * cols + c]
  void (*affine_transpose)(const double* w, const double* g, double* out, std::size_t rows,
                           std::size_t cols);
  // w[r * cols + c] += alpha * g[r] * x[c]
  void (*outer_accumulate)(double alpha, const double* g, const double* x, double* w,
                           std::size_t rows, std::size_t cols);
};

bool backend_supported(Backend backend) noexcept;
std::string_view backend_name(Backend backend) noexcept;

/// Kernel table of a specific backend. Throws semback::Error when the backend
/// is not available on this machine or build.
const KernelTable& kernels(Backend backend);

/// Kernel table of the active backend.
const KernelTable& kernels() noexcept;
Backend active_backend() noexcept;
void set_backend(Backend backend);

/// Restores the previous backend on scope exit.
class ScopedBackend {
 public:
  explicit ScopedBackend(Backend backend) : previous_(active_backend()) { set_backend(backend); }
  ~ScopedBackend() { set_backend(previous_); }
  ScopedBackend(const ScopedBackend&) = delete;
  ScopedBackend& operator=(const ScopedBackend&) = delete;

 private:
  Backend previous_;
};

inline double dot(std::span<const double> a, std::span<const double> b) noexcept {
  return kernels().dot(a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) noexcept {
  kernels().axpy(alpha, x.data(), y.data(), x.size());
}

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void affine(const double* w, const double* bias, const double* x, double* y, std::size_t rows,
            std::size_t cols);
void affine_transpose(const double* w, const double* g, double* out, std::size_t rows,
                      std::size_t cols);
void outer_accumulate(double alpha, const double* g, const double* x, double* w, std::size_t rows,
                      std::size_t cols);
}  // namespace scalar

#if defined(SEMBACK_HAVE_AVX2)
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void affine(const double* w, const double* bias, const double* x, double* y, std::size_t rows,
            std::size_t cols);
void affine_transpose(const double* w, const double* g, double* out, std::size_t rows,
                      std::size_t cols);
void outer_accumulate(double alpha, const double* g, const double* x, double* w, std::size_t rows,
                      std::size_t cols);
}  // namespace avx2
#endif

}  // namespace semback::simd
