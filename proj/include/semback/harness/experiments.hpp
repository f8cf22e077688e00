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

#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "semback/data/task.hpp"
#include "semback/detector/detection.hpp"
#include "semback/distances/test_set.hpp"
#include "semback/harness/config.hpp"
#include "semback/harness/pool_builder.hpp"
#include "semback/inversion/inversion.hpp"

namespace semback::harness {

/// Distance test sets keyed by kind, inversion variant and model of interest.
/// With a directory, sets are stored as CSV and reloaded on a later run.
class SetCache {
 public:
  SetCache(const ExperimentConfig& cfg, const data::Task& task,
           std::optional<std::filesystem::path> dir = std::nullopt);

  /// `model` is ignored for kinds that do not depend on a model.
  std::shared_ptr<const distances::DistanceTestSet> get(distances::SetKind kind, const nn::Model* model);
  std::shared_ptr<const distances::DistanceTestSet> ablation(inversion::Variant variant, const nn::Model& model);

 private:
  std::shared_ptr<const distances::DistanceTestSet> fetch(
      std::uint64_t key, const std::string& label,
      const std::function<distances::DistanceTestSet()>& build);

  const ExperimentConfig& cfg_;
  const data::Task& task_;
  std::optional<std::filesystem::path> dir_;
  std::mutex mutex_;
  std::map<std::uint64_t, std::shared_ptr<const distances::DistanceTestSet>> memo_;
};

/// Models of several pools flattened into one row list; shared models
/// (identical objects) occupy one row.
struct Roster {
  std::vector<const detector::PoolMember*> members;
  std::vector<std::string> labels;  // pool/id of the first pool listing the row

  std::size_t add(const detector::PoolMember& member, const std::string& pool);
  std::size_t find(const nn::Model* model) const;
};

/// Distances of every roster row to every clean roster row for one set kind,
/// for all requested (distance, aggregation) pairs.
std::vector<detector::PoolDistances> roster_distances(const Roster& roster, distances::SetKind kind,
                                                      SetCache& sets,
                                                      std::span<const distances::SampleDistance> dkinds,
                                                      std::span<const distances::Aggregation> akinds,
                                                      std::optional<inversion::Variant> variant = std::nullopt);

struct GridRow {
  std::string pool;
  std::optional<double> alpha;
  double asr_floor = 0.0;
  std::string set;  // set kind, or the inversion variant for ablations
  distances::SampleDistance distance = distances::SampleDistance::CosL;
  distances::Aggregation aggregation = distances::Aggregation::Std;
  std::size_t clean = 0;
  std::size_t poisoned = 0;
  bool well_defined = true;
  detector::DetectionReport report;
  std::uint64_t fingerprint = 0;
};

/// Leave-one-out detection for every (set kind, distance, aggregation).
std::vector<GridRow> run_grid(const BuiltPool& pool, SetCache& sets, const ExperimentConfig& cfg);

/// Best J of a grid restricted by the optional filters.
double best_j(const std::vector<GridRow>& rows, std::optional<std::string> set = std::nullopt,
              std::optional<distances::SampleDistance> distance = std::nullopt,
              std::optional<distances::Aggregation> aggregation = std::nullopt);
const GridRow& find_row(const std::vector<GridRow>& rows, const std::string& set,
                        distances::SampleDistance d, distances::Aggregation a);

struct MatrixCell {
  double asr_floor = 0.0;
  std::string authority;
  std::string provider;
  bool well_defined = true;
  detector::Confusion confusion;
};

struct SweepResult {
  std::vector<BuiltPool> pools;  // non-adaptive base pool first
  std::vector<GridRow> rows;
  std::vector<MatrixCell> matrix;
};

/// Adaptive pools for every alpha sharing the clean models of the base pool,
/// grids for every ASR floor, and the authority x provider matrix on the
/// configured matrix cell.
SweepResult run_adaptive_sweep(PoolBuilder& builder, SetCache& sets, const ExperimentConfig& cfg);

/// Grid rows for the four inversion variants (distances x aggregations).
std::vector<GridRow> run_ablation(const BuiltPool& pool, SetCache& sets, const ExperimentConfig& cfg);

struct StatsRow {
  std::size_t correct = 0;
  detector::Significance significance;
};
std::vector<StatsRow> stats_table(std::size_t total);

struct PoolSizeResult {
  BuiltPool big;
  BuiltPool test;
  std::vector<detector::PoolSizeRow> rows;
};
PoolSizeResult run_pool_size_study(PoolBuilder& builder, SetCache& sets, const ExperimentConfig& cfg);

// CSV writers. Every row ends with the fingerprint of its configuration.
void write_grid_csv(std::ostream& out, const std::vector<GridRow>& rows);
void write_matrix_csv(std::ostream& out, const std::vector<MatrixCell>& cells, std::uint64_t config_fingerprint);
void write_stats_csv(std::ostream& out, const std::vector<StatsRow>& rows);
void write_pool_size_csv(std::ostream& out, const std::vector<detector::PoolSizeRow>& rows,
                         std::uint64_t config_fingerprint);
void write_distance_csv(std::ostream& out, const Roster& roster, const std::string& set,
                        std::span<const distances::SampleDistance> dkinds,
                        std::span<const distances::Aggregation> akinds,
                        const std::vector<detector::PoolDistances>& grid);
void write_pool_metrics_csv(std::ostream& out, const BuiltPool& pool);

/// Writes `<csv>.meta.json` next to an output file.
void write_meta(const std::filesystem::path& csv, const std::string& command, const ExperimentConfig& cfg,
                const nlohmann::json& artifacts);

std::string fixed(double value, int decimals);

}  // namespace semback::harness
