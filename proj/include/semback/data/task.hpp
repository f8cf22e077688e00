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
#include <vector>

#include "semback/data/dataset.hpp"
#include "semback/nn/model.hpp"

namespace semback::data {

/// Synthetic task: k clean classes and k_ood out-of-distribution classes, each
/// an isotropic Gaussian cluster truncated to [0,1]^d (out-of-box draws are
/// resampled).
struct TaskSpec {
  std::size_t dim = 8;
  std::size_t classes = 5;
  std::size_t ood_classes = 6;
  std::size_t train_per_class = 200;
  std::size_t val_per_class = 40;
  std::size_t test_per_class = 40;
  double spread = 0.08;
  /// Minimum Euclidean distance between any two cluster centers.
  double min_separation = 0.4;
  /// Centers are drawn uniformly from [margin, 1 - margin]^d.
  double center_margin = 0.15;
  int max_placement_attempts = 100000;
  std::uint64_t seed = 0;

  void validate() const;
  std::uint64_t fingerprint() const;
};

/// Samples of one OOD class, split like the clean task.
struct OodPool {
  int source = 0;
  Samples train;
  Samples val;
  Samples test;
};

struct Task {
  TaskSpec spec;
  Samples clean_centers;
  Samples ood_centers;
  Dataset train;
  Dataset val;
  Dataset test;
  std::vector<OodPool> ood;
};

Task make_task(const TaskSpec& spec);

/// Fraction of each OOD class's training samples that the model assigns to
/// `target`.
std::vector<double> natural_backdoor_rates(const nn::Model& clean_model,
                                           const std::vector<OodPool>& ood, std::size_t target);

/// Excludes the OOD class that most often activates `target` in the clean
/// model (lowest id on ties), then draws uniformly among the rest.
int select_backdoor_source(const nn::Model& clean_model, const std::vector<OodPool>& ood,
                           std::size_t target, std::uint64_t seed);

/// Clean examples followed by every OOD sample relabeled to `target`.
Dataset poison(const Dataset& clean, const Samples& ood_samples, int source, std::size_t target);

struct MulticlassPoisoning {
  /// sources[t] is the OOD class assigned to target class t.
  std::vector<int> sources;
  Dataset train;
  Dataset val;
};

/// Assigns a distinct OOD source to every class, excluding for each class its
/// natural-backdoor OOD class under the clean model, uniformly at random among
/// feasible assignments (randomized backtracking).
std::vector<int> assign_multiclass_sources(const nn::Model& clean_model,
                                           const std::vector<OodPool>& ood, std::size_t classes,
                                           std::uint64_t seed);

MulticlassPoisoning poison_multiclass(const Dataset& clean_train, const Dataset& clean_val,
                                      const std::vector<OodPool>& ood,
                                      const nn::Model& clean_model, std::uint64_t seed);

}  // namespace semback::data
