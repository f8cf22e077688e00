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
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "semback/data/task.hpp"
#include "semback/nn/model.hpp"

namespace semback::detector {

enum class Role { Clean, Poisoned };

const char* role_name(Role role) noexcept;
Role parse_role(const std::string& text);

struct BackdoorPair {
  std::size_t target = 0;
  int source = 0;
};

struct PoolMember {
  std::string id;
  Role role = Role::Clean;
  std::size_t index = 0;
  std::shared_ptr<const nn::Model> model;
  std::uint64_t seed = 0;
  std::uint64_t recipe_fingerprint = 0;
  std::optional<double> epsilon;
  /// Backdoor of a poisoned model.
  std::optional<BackdoorPair> backdoor;
  std::optional<double> alpha;
  double accuracy = std::numeric_limits<double>::quiet_NaN();
  double asr = std::numeric_limits<double>::quiet_NaN();
  double robust_accuracy = std::numeric_limits<double>::quiet_NaN();

  bool poisoned() const noexcept { return role == Role::Poisoned; }
};

/// Clean models M and poisoned models M~ of one pool.
struct ModelPool {
  std::string name;
  std::vector<PoolMember> clean;
  std::vector<PoolMember> poisoned;

  /// Clean members first, then poisoned.
  std::vector<const PoolMember*> members() const;
  std::vector<BackdoorPair> backdoor_pairs() const;
  /// Throws PoolError on duplicate fingerprints or missing models.
  void validate() const;
};

/// Copy of the pool keeping the poisoned models with ASR >= floor.
ModelPool filter_by_asr(const ModelPool& pool, double floor);

struct ModelMetrics {
  double accuracy = 0.0;
  /// Fraction of held-out backdoor samples of every listed pair classified as
  /// that pair's target.
  double asr = 0.0;
  /// Largest per-pair rate among the listed pairs.
  double max_pair_asr = 0.0;
  double robust_accuracy = 0.0;
};

/// Metrics on the clean test split and the OOD test splits of the pairs,
/// with clipped PGD at `epsilon` for the robust accuracy.
ModelMetrics model_metrics(const nn::Model& model, const data::Task& task,
                           std::span<const BackdoorPair> pairs, double epsilon);

/// Fills accuracy, ASR and robust accuracy of every member. Poisoned models
/// are measured on their own backdoor; clean models on all backdoor pairs of
/// the pool's poisoned models.
void pool_metrics(ModelPool& pool, const data::Task& task, double epsilon);

}  // namespace semback::detector
