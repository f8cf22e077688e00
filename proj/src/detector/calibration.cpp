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

#include "semback/detector/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "semback/error.hpp"

namespace semback::detector {

double Confusion::tpr() const noexcept {
  return positives() == 0 ? 0.0 : static_cast<double>(true_positive) / static_cast<double>(positives());
}

double Confusion::tnr() const noexcept {
  return negatives() == 0 ? 0.0 : static_cast<double>(true_negative) / static_cast<double>(negatives());
}

Confusion confusion(std::span<const double> clean_scores, std::span<const double> poisoned_scores,
                    double threshold) {
  Confusion c;
  for (const double s : clean_scores) (is_flagged(s, threshold) ? c.false_positive : c.true_negative)++;
  for (const double s : poisoned_scores) (is_flagged(s, threshold) ? c.true_positive : c.false_negative)++;
  return c;
}

Calibration calibrate_threshold(std::span<const double> clean_scores,
                                std::span<const double> poisoned_scores) {
  if (clean_scores.empty() || poisoned_scores.empty())
    throw PoolError("calibration needs at least one clean and one poisoned score");
  for (const double s : clean_scores)
    if (!std::isfinite(s)) throw NumericError("calibration: non-finite clean score");
  for (const double s : poisoned_scores)
    if (!std::isfinite(s)) throw NumericError("calibration: non-finite poisoned score");

  std::vector<double> clean(clean_scores.begin(), clean_scores.end());
  std::vector<double> poisoned(poisoned_scores.begin(), poisoned_scores.end());
  std::sort(clean.begin(), clean.end());
  std::sort(poisoned.begin(), poisoned.end());
  std::vector<double> u(clean);
  u.insert(u.end(), poisoned.begin(), poisoned.end());
  std::sort(u.begin(), u.end());
  u.erase(std::unique(u.begin(), u.end()), u.end());
  const std::size_t n = u.size();
  const long long nc = static_cast<long long>(clean.size());
  const long long np = static_cast<long long>(poisoned.size());

  // Piece p covers thresholds [u_{p-1}, u_p) with u_{-1} = -inf and u_n = +inf.
  // J * nc * np is an integer, so pieces are compared exactly.
  std::vector<long long> scaled(n + 1);
  for (std::size_t p = 0; p <= n; ++p) {
    long long tn = 0, tp = 0;
    if (p > 0) {
      const double nu = u[p - 1];
      tn = std::upper_bound(clean.begin(), clean.end(), nu) - clean.begin();
      tp = poisoned.end() - std::upper_bound(poisoned.begin(), poisoned.end(), nu);
    } else {
      tp = np;
    }
    scaled[p] = tn * np + tp * nc - nc * np;
  }
  const long long best = *std::max_element(scaled.begin(), scaled.end());
  const double gap = n >= 2 ? (u[n - 1] - u[0]) / static_cast<double>(n - 1) : 1.0;

  double threshold = -std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p <= n;) {
    if (scaled[p] != best) {
      ++p;
      continue;
    }
    std::size_t q = p;
    while (q + 1 <= n && scaled[q + 1] == best) ++q;
    // Interval [lower, upper) spans pieces p..q.
    const bool lower_inf = p == 0;
    const bool upper_inf = q == n;
    double mid;
    if (lower_inf && upper_inf) {
      mid = (u.front() + u.back()) / 2.0;
    } else if (lower_inf) {
      mid = u[q] - gap / 2.0;
    } else if (upper_inf) {
      mid = u[p - 1] + gap / 2.0;
    } else {
      mid = (u[p - 1] + u[q]) / 2.0;
    }
    threshold = std::max(threshold, mid);
    p = q + 1;
  }
  return {threshold, static_cast<double>(best) / static_cast<double>(nc * np)};
}

}  // namespace semback::detector
