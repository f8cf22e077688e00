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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "semback/data/task.hpp"
#include "semback/distances/distances.hpp"
#include "semback/distances/test_set.hpp"
#include "semback/inversion/config.hpp"
#include "semback/nn/train.hpp"

namespace semback::harness {

/// Training variant of a pool.
struct PoolSpec {
  /// Adversarial training radius; empty for plain training.
  std::optional<double> epsilon;
  /// Adaptive attack coefficient of the poisoned models; empty for plain
  /// poisoning.
  std::optional<double> alpha;
  /// Number of clean and of poisoned models (0 means the config's pool_size).
  std::size_t size = 0;
  /// Seed namespace of the pool's models, used to build disjoint pools.
  std::string lineage = "pool";

  std::string name() const;
};

struct ExperimentConfig {
  data::TaskSpec task;
  /// Shared recipe; per-model seeds are derived from the master seed.
  nn::TrainRecipe recipe;
  /// Inner PGD of adversarial training: step = epsilon * fraction.
  double adversarial_step_fraction = 0.5;
  int adversarial_steps = 3;
  /// Robustness levels of the base pools; an empty entry is plain training.
  std::vector<std::optional<double>> epsilons{std::nullopt, 0.1};
  std::size_t pool_size = 6;
  std::vector<distances::SetKind> set_kinds{std::begin(distances::kAllSetKinds),
                                            std::end(distances::kAllSetKinds)};
  std::vector<distances::SampleDistance> distances{std::begin(distances::kAllSampleDistances),
                                                   std::end(distances::kAllSampleDistances)};
  std::vector<distances::Aggregation> aggregations{std::begin(distances::kAllAggregations),
                                                   std::end(distances::kAllAggregations)};
  std::vector<double> alphas{0.1, 0.3, 0.5, 0.7, 0.9};
  std::vector<double> asr_floors{0.0, 0.25, 0.5};
  /// Robustness of the adaptive pools and their non-adaptive counterpart.
  std::optional<double> adaptive_epsilon = 0.1;
  distances::SetKind matrix_set = distances::SetKind::Inverted;
  distances::SampleDistance matrix_distance = distances::SampleDistance::CosL;
  distances::Aggregation matrix_aggregation = distances::Aggregation::Std;
  inversion::InversionConfig inversion;
  /// Radius of clipped PGD used for the robust-accuracy metric.
  double robust_eval_epsilon = 0.1;
  /// Pool-size study: big pool, disjoint test pool, sub-pool sizes.
  std::optional<double> study_epsilon = 0.1;
  std::size_t big_pool_size = 12;
  std::size_t test_pool_size = 5;
  std::vector<std::size_t> m_values{2, 4, 6, 8, 12};
  std::size_t resamples = 500;
  std::optional<std::uint64_t> seed;
  std::filesystem::path output_dir = "out";

  /// Throws ConfigError when `seed` is missing.
  std::uint64_t master_seed() const;
  void validate() const;
  /// Hash over every field except the output directory.
  std::uint64_t fingerprint() const;

  /// Recipe of a pool with a given robustness.
  nn::TrainRecipe recipe_for(std::optional<double> epsilon, std::uint64_t seed) const;
  /// Task parameters with the task seed derived from the master seed.
  data::TaskSpec task_spec() const;
  distances::TestSetConfig test_set_config(std::uint64_t model_fingerprint) const;
};

nlohmann::json to_json(const ExperimentConfig& cfg);
/// Missing keys keep their defaults; unknown keys are a ConfigError.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace semback::harness
