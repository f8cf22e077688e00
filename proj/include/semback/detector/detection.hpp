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
#include <cstdint>
#include <span>
#include <vector>

#include "semback/detector/calibration.hpp"
#include "semback/detector/significance.hpp"
#include "semback/distances/distances.hpp"
#include "semback/distances/test_set.hpp"
#include "semback/nn/model.hpp"

namespace semback::detector {

double median(std::span<const double> values);

/// s(theta): median of model_distance(pool model, theta) over the clean pool
/// on the set built for theta. Pool entries that are the same object as theta
/// are skipped.
double score(const nn::Model& theta, std::span<const nn::Model* const> clean_pool,
             const distances::DistanceTestSet& set, distances::SampleDistance dkind,
             distances::Aggregation akind);

/// Distances between every pool model (rows) and every clean model (columns).
/// Column c is the clean model at row column_row[c]. values[r * columns + c]
/// is model_distance(clean c, model r) on the set of model r.
struct PoolDistances {
  std::size_t rows = 0;
  std::size_t columns = 0;
  std::vector<std::uint8_t> poisoned;
  std::vector<std::size_t> column_row;
  std::vector<double> values;

  double at(std::size_t row, std::size_t column) const noexcept { return values[row * columns + column]; }
};

/// Sub-matrix of the listed rows (in that order); columns are the clean
/// models among them.
PoolDistances restrict_rows(const PoolDistances& distances, std::span<const std::size_t> rows);

/// Pool rows with the clean rows doubling as columns.
struct PoolView {
  std::vector<const nn::Model*> models;
  std::vector<std::uint8_t> poisoned;
  /// Set of each row model; rows may share one set.
  std::vector<const distances::DistanceTestSet*> sets;
};

/// One PoolDistances per (distance, aggregation), indexed
/// d * aggregations.size() + a. Model outputs on a set are computed once.
std::vector<PoolDistances> pool_distance_grid(const PoolView& view,
                                              std::span<const distances::SampleDistance> dkinds,
                                              std::span<const distances::Aggregation> akinds);

struct DetectionReport {
  /// s(theta) against every other clean model, one per row.
  std::vector<double> scores;
  std::vector<std::uint8_t> poisoned;
  /// Threshold calibrated without each row, and the held-out verdict.
  std::vector<double> fold_thresholds;
  std::vector<std::uint8_t> flagged;
  Confusion confusion;
  /// Calibration over the full pool.
  Calibration full;
  Significance significance;

  double j() const noexcept { return confusion.j(); }
};

/// Leave-one-out evaluation: every row is held out from the whole pool. The
/// threshold is calibrated on the remaining models, whose scores are taken
/// against the remaining clean models other than themselves. The held-out
/// model is scored against every clean model other than itself.
DetectionReport loo_evaluate(const PoolDistances& distances);

/// Threshold from the authority rows, verdicts on the provider rows. A
/// provider model that is also an authority row is left out of calibration
/// and out of every reference set while it is being judged, so identical row
/// lists reproduce loo_evaluate.
Confusion cross_evaluate(const PoolDistances& distances, std::span<const std::size_t> authority_rows,
                         std::span<const std::size_t> provider_rows);

struct PoolSizeRow {
  std::size_t m = 0;
  std::size_t resamples = 0;
  double mean_j = 0.0;
  double min_j = 0.0;
  double max_j = 0.0;
};

/// For each m, draws sub-pools of m clean and m poisoned models among
/// `big_rows`, calibrates on the sub-pool and classifies `test_rows` with
/// scores against the m sub-pool clean models. Every big clean row must be a
/// column.
std::vector<PoolSizeRow> pool_size_study(const PoolDistances& distances,
                                         std::span<const std::size_t> big_rows,
                                         std::span<const std::size_t> test_rows,
                                         std::span<const std::size_t> m_values,
                                         std::size_t resamples, std::uint64_t seed);

}  // namespace semback::detector
