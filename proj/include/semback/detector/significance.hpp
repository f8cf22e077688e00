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

#include <cstddef>

namespace semback::detector {

/// P[X >= k] for X ~ Binomial(n, p).
double binomial_upper_tail(std::size_t n, std::size_t k, double p);

struct Significance {
  /// One-tailed p-value against random guessing: P[Binomial(n, 1/2) >= correct].
  double p_value = 1.0;
  /// J = 2 correct / n - 1 (balanced pool).
  double j = 0.0;
  /// One-sided 95% lower confidence bound on J: 2 p_L - 1 where p_L is the
  /// success probability at which observing `correct` or more has probability
  /// exactly 0.05.
  double ci_infimum = -1.0;
};

Significance binomial_p(std::size_t correct, std::size_t total);

}  // namespace semback::detector
