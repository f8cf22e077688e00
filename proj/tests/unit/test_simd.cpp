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

#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "semback/nn/model.hpp"
#include "semback/simd/kernels.hpp"

using namespace semback;
using simd::Backend;

namespace {

bool close(double a, double b) { return std::abs(a - b) <= 1e-12 * (1.0 + std::abs(a) + std::abs(b)); }

bool all_close(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!close(a[i], b[i])) return false;
  return true;
}

}  // namespace

TEST_CASE("scalar backend is always available") {
  CHECK(simd::backend_supported(Backend::Scalar));
  CHECK(simd::backend_name(Backend::Scalar) == "scalar");
}

TEST_CASE("vector kernels match the scalar kernels") {
  if (!simd::backend_supported(Backend::Avx2)) {
    MESSAGE("AVX2 not available on this machine; equivalence skipped");
    return;
  }
  const auto& s = simd::kernels(Backend::Scalar);
  const auto& v = simd::kernels(Backend::Avx2);
  std::mt19937_64 rng(3);
  for (std::size_t n = 0; n <= 67; ++n) {
    const auto a = testing::uniform_vector(rng, n, -1, 1);
    const auto b = testing::uniform_vector(rng, n, -1, 1);
    CHECK(close(s.dot(a.data(), b.data(), n), v.dot(a.data(), b.data(), n)));
    auto ys = b, yv = b;
    s.axpy(0.7, a.data(), ys.data(), n);
    v.axpy(0.7, a.data(), yv.data(), n);
    CHECK(all_close(ys, yv));
  }
  for (std::size_t rows : {1, 3, 8, 13}) {
    for (std::size_t cols : {1, 4, 7, 16, 33}) {
      const auto w = testing::uniform_vector(rng, rows * cols, -1, 1);
      const auto bias = testing::uniform_vector(rng, rows, -1, 1);
      const auto x = testing::uniform_vector(rng, cols, -1, 1);
      const auto g = testing::uniform_vector(rng, rows, -1, 1);
      std::vector<double> ys(rows), yv(rows);
      s.affine(w.data(), bias.data(), x.data(), ys.data(), rows, cols);
      v.affine(w.data(), bias.data(), x.data(), yv.data(), rows, cols);
      CHECK(all_close(ys, yv));
      std::vector<double> ts(cols), tv(cols);
      s.affine_transpose(w.data(), g.data(), ts.data(), rows, cols);
      v.affine_transpose(w.data(), g.data(), tv.data(), rows, cols);
      CHECK(all_close(ts, tv));
      auto ws = w, wv = w;
      s.outer_accumulate(0.3, g.data(), x.data(), ws.data(), rows, cols);
      v.outer_accumulate(0.3, g.data(), x.data(), wv.data(), rows, cols);
      CHECK(all_close(ws, wv));
    }
  }
}

TEST_CASE("model gradients agree across backends") {
  if (!simd::backend_supported(Backend::Avx2)) return;
  std::mt19937_64 rng(5);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto model = testing::random_model(seed, 9, {17, 11}, 5);
    const auto x = testing::uniform_vector(rng, 9);
    std::vector<double> gs, gv, ls, lv;
    {
      simd::ScopedBackend scope(Backend::Scalar);
      gs = nn::grad(model, x, 2, nn::Wrt::Parameters);
      ls = nn::forward(model, x).logits;
    }
    {
      simd::ScopedBackend scope(Backend::Avx2);
      gv = nn::grad(model, x, 2, nn::Wrt::Parameters);
      lv = nn::forward(model, x).logits;
    }
    CHECK(all_close(gs, gv));
    CHECK(all_close(ls, lv));
  }
}

TEST_CASE("scoped backend restores the previous selection") {
  const Backend before = simd::active_backend();
  {
    simd::ScopedBackend scope(Backend::Scalar);
    CHECK(simd::active_backend() == Backend::Scalar);
  }
  CHECK(simd::active_backend() == before);
}
