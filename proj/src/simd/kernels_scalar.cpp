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

#include "semback/simd/kernels.hpp"

namespace semback::simd::scalar {

double dot(const double* a, const double* b, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void affine(const double* w, const double* bias, const double* x, double* y, std::size_t rows,
            std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = bias[r] + dot(w + r * cols, x, cols);
}

void affine_transpose(const double* w, const double* g, double* out, std::size_t rows,
                      std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) axpy(g[r], w + r * cols, out, cols);
}

void outer_accumulate(double alpha, const double* g, const double* x, double* w, std::size_t rows,
                      std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) axpy(alpha * g[r], x, w + r * cols, cols);
}

}  // namespace semback::simd::scalar
