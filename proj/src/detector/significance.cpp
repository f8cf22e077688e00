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

#include "semback/detector/significance.hpp"

#include <cmath>
#include <string>

#include "semback/error.hpp"

namespace semback::detector {

double binomial_upper_tail(std::size_t n, std::size_t k, double p) {
  if (k > n) return 0.0;
  if (k == 0) return 1.0;
  if (p <= 0.0) return 0.0;
  if (p >= 1.0) return 1.0;
  const double lp = std::log(p), lq = std::log1p(-p);
  const double ln_n = std::lgamma(static_cast<double>(n) + 1.0);
  double sum = 0.0;
  for (std::size_t i = k; i <= n; ++i) {
    const double di = static_cast<double>(i);
    const double log_term = ln_n - std::lgamma(di + 1.0) - std::lgamma(static_cast<double>(n - i) + 1.0) +
                            di * lp + static_cast<double>(n - i) * lq;
    sum += std::exp(log_term);
  }
  return std::min(sum, 1.0);
}

namespace {

// Exact tail at p = 1/2 with integer-valued binomial coefficients.
double half_upper_tail(std::size_t n, std::size_t k) {
  if (k > n) return 0.0;
  long double coeff = 1.0L, sum = 0.0L;
  // coeff walks C(n, i) for i = 0..n.
  for (std::size_t i = 0; i <= n; ++i) {
    if (i >= k) sum += coeff;
    coeff = coeff * static_cast<long double>(n - i) / static_cast<long double>(i + 1);
  }
  return static_cast<double>(sum / std::pow(2.0L, static_cast<long double>(n)));
}

}  // namespace

Significance binomial_p(std::size_t correct, std::size_t total) {
  if (total == 0 || correct > total)
    throw ConfigError("binomial_p: need 0 <= correct <= total and total >= 1, got " +
                      std::to_string(correct) + " of " + std::to_string(total));
  Significance s;
  s.p_value = total <= 1000 ? half_upper_tail(total, correct) : binomial_upper_tail(total, correct, 0.5);
  s.j = 2.0 * static_cast<double>(correct) / static_cast<double>(total) - 1.0;
  if (correct == 0) {
    s.ci_infimum = -1.0;
    return s;
  }
  // The tail probability grows with p; bisect for tail(p_L) = 0.05.
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    (binomial_upper_tail(total, correct, mid) < 0.05 ? lo : hi) = mid;
  }
  s.ci_infimum = 2.0 * (0.5 * (lo + hi)) - 1.0;
  return s;
}

}  // namespace semback::detector
