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
#include <span>

namespace semback::detector {

/// A model is flagged as poisoned iff its score exceeds the threshold; a score
/// equal to the threshold is clean.
inline bool is_flagged(double score, double threshold) noexcept { return score > threshold; }

struct Confusion {
  std::size_t true_positive = 0;
  std::size_t false_negative = 0;
  std::size_t true_negative = 0;
  std::size_t false_positive = 0;

  std::size_t positives() const noexcept { return true_positive + false_negative; }
  std::size_t negatives() const noexcept { return true_negative + false_positive; }
  std::size_t correct() const noexcept { return true_positive + true_negative; }
  double tpr() const noexcept;
  double tnr() const noexcept;
  double fpr() const noexcept { return 1.0 - tnr(); }
  double fnr() const noexcept { return 1.0 - tpr(); }
  /// Youden's J = TPR + TNR - 1.
  double j() const noexcept { return tpr() + tnr() - 1.0; }
};

Confusion confusion(std::span<const double> clean_scores, std::span<const double> poisoned_scores,
                    double threshold);

struct Calibration {
  double threshold = 0.0;
  double j = 0.0;
};

/// Threshold maximizing J with poisoned scores as positives. J is constant on
/// the pieces between consecutive distinct scores; adjacent optimal pieces
/// form one interval and the midpoint of the optimal interval with the
/// greatest midpoint is returned. A missing endpoint of an unbounded interval
/// is replaced by the finite endpoint shifted by the mean gap between distinct
/// scores (1 with fewer than two distinct scores); when every threshold is
/// optimal the midpoint of the score range is used.
Calibration calibrate_threshold(std::span<const double> clean_scores,
                                std::span<const double> poisoned_scores);

}  // namespace semback::detector
