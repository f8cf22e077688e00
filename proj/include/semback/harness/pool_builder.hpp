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
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "json.hpp"

#include "semback/data/task.hpp"
#include "semback/detector/pool.hpp"
#include "semback/harness/config.hpp"
#include "semback/nn/model.hpp"

namespace semback::harness {

struct BuiltPool {
  PoolSpec spec;
  detector::ModelPool pool;
  /// Clean model trained with poisoned model i's seed and recipe; the
  /// adaptive attack's reference and the natural-backdoor oracle.
  std::vector<std::shared_ptr<const nn::Model>> twins;
  std::vector<double> twin_accuracy;
};

/// Trains (or reloads) pools for one experiment. Models are keyed by a hash of
/// everything that determines them, so pools sharing models (adaptive pools
/// share the clean models and twins of their base pool) train them once, and
/// with a cache directory a rerun reloads instead of retraining.
class PoolBuilder {
 public:
  PoolBuilder(const ExperimentConfig& cfg, const data::Task& task,
              std::optional<std::filesystem::path> cache_dir = std::nullopt);

  BuiltPool build(PoolSpec spec);

  /// Number of models trained (not reloaded) so far.
  std::size_t trained_count() const noexcept { return trained_; }

 private:
  using Trainer = std::function<nn::Model()>;
  std::shared_ptr<const nn::Model> obtain(std::uint64_t key, const std::string& id, const Trainer& train);
  std::uint64_t derive(const PoolSpec& spec, const char* role, std::size_t index) const;

  const ExperimentConfig& cfg_;
  const data::Task& task_;
  std::uint64_t task_fingerprint_;
  std::optional<std::filesystem::path> cache_dir_;
  std::mutex mutex_;
  std::map<std::uint64_t, std::shared_ptr<const nn::Model>> memo_;
  std::size_t trained_ = 0;
};

nlohmann::json manifest(const BuiltPool& pool, const ExperimentConfig& cfg);
void write_manifest(const std::filesystem::path& path, const BuiltPool& pool, const ExperimentConfig& cfg);

}  // namespace semback::harness
