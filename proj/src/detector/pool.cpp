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

#include "semback/detector/pool.hpp"

#include <set>

#include "semback/attacks/pgd.hpp"
#include "semback/error.hpp"
#include "semback/nn/train.hpp"
#include "semback/parallel.hpp"

namespace semback::detector {

const char* role_name(Role role) noexcept { return role == Role::Clean ? "clean" : "poisoned"; }

Role parse_role(const std::string& text) {
  if (text == "clean") return Role::Clean;
  if (text == "poisoned") return Role::Poisoned;
  throw IoError("unknown model role '" + text + "'");
}

std::vector<const PoolMember*> ModelPool::members() const {
  std::vector<const PoolMember*> out;
  for (const auto& m : clean) out.push_back(&m);
  for (const auto& m : poisoned) out.push_back(&m);
  return out;
}

std::vector<BackdoorPair> ModelPool::backdoor_pairs() const {
  std::vector<BackdoorPair> pairs;
  for (const auto& m : poisoned)
    if (m.backdoor) pairs.push_back(*m.backdoor);
  return pairs;
}

void ModelPool::validate() const {
  std::set<std::uint64_t> seen;
  for (const auto* m : members()) {
    if (!m->model) throw PoolError("pool " + name + ": member " + m->id + " has no model");
    if (!seen.insert(m->model->fingerprint()).second)
      throw PoolError("pool " + name + ": duplicate model fingerprint at " + m->id);
  }
}

ModelPool filter_by_asr(const ModelPool& pool, double floor) {
  ModelPool out;
  out.name = pool.name;
  out.clean = pool.clean;
  for (const auto& m : pool.poisoned)
    if (m.asr >= floor) out.poisoned.push_back(m);
  return out;
}

ModelMetrics model_metrics(const nn::Model& model, const data::Task& task,
                           std::span<const BackdoorPair> pairs, double epsilon) {
  ModelMetrics out;
  out.accuracy = nn::accuracy(model, task.test);
  std::size_t hits = 0, total = 0;
  for (const auto& pair : pairs) {
    if (pair.source < 0 || static_cast<std::size_t>(pair.source) >= task.ood.size())
      throw DataError("metrics: OOD source " + std::to_string(pair.source) + " does not exist");
    const auto& samples = task.ood[static_cast<std::size_t>(pair.source)].test;
    if (samples.empty()) throw DataError("metrics: empty backdoor test split");
    std::size_t h = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) h += nn::predict(model, samples.row(i)) == pair.target;
    hits += h;
    total += samples.size();
    out.max_pair_asr = std::max(out.max_pair_asr, static_cast<double>(h) / static_cast<double>(samples.size()));
  }
  out.asr = total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
  out.robust_accuracy = attacks::robust_accuracy(model, task.test, attacks::robust_eval_pgd(epsilon));
  return out;
}

void pool_metrics(ModelPool& pool, const data::Task& task, double epsilon) {
  const auto pairs = pool.backdoor_pairs();
  std::vector<PoolMember*> all;
  for (auto& m : pool.clean) all.push_back(&m);
  for (auto& m : pool.poisoned) all.push_back(&m);
  parallel_for(all.size(), [&](std::size_t i) {
    PoolMember& m = *all[i];
    if (m.poisoned() && !m.backdoor) throw PoolError("metrics: poisoned member " + m.id + " has no backdoor");
    const std::vector<BackdoorPair> own = m.poisoned() ? std::vector<BackdoorPair>{*m.backdoor} : pairs;
    const auto metrics = model_metrics(*m.model, task, own, epsilon);
    m.accuracy = metrics.accuracy;
    m.asr = metrics.asr;
    m.robust_accuracy = metrics.robust_accuracy;
  });
}

}  // namespace semback::detector
