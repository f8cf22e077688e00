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

#include "semback/harness/pool_builder.hpp"

#include <fstream>
#include <sstream>

#include "semback/attacks/adaptive.hpp"
#include "semback/error.hpp"
#include "semback/nn/serialize.hpp"
#include "semback/nn/train.hpp"
#include "semback/parallel.hpp"
#include "semback/seed.hpp"

namespace semback::harness {

namespace {

std::uint64_t combine(std::uint64_t h, std::uint64_t v) { return splitmix64(h ^ splitmix64(v)); }

std::uint64_t combine(std::uint64_t h, double v) { return fnv1a(data::format_double(v), splitmix64(h)); }

std::uint64_t combine(std::uint64_t h, const std::string& s) { return fnv1a(s, splitmix64(h)); }

nn::Model fit(const nn::TrainRecipe& recipe, const data::Dataset& train, const data::Dataset& val) {
  return recipe.adversarial ? nn::adv_train(recipe, train, val) : nn::train(recipe, train, val);
}

}  // namespace

PoolBuilder::PoolBuilder(const ExperimentConfig& cfg, const data::Task& task,
                         std::optional<std::filesystem::path> cache_dir)
    : cfg_(cfg), task_(task), task_fingerprint_(task.spec.fingerprint()), cache_dir_(std::move(cache_dir)) {
  if (cache_dir_) std::filesystem::create_directories(*cache_dir_ / "models");
}

std::uint64_t PoolBuilder::derive(const PoolSpec& spec, const char* role, std::size_t index) const {
  const std::string name = spec.lineage == "pool" ? std::string(role) : spec.lineage + "/" + role;
  return derive_seed(cfg_.master_seed(), name, index);
}

std::shared_ptr<const nn::Model> PoolBuilder::obtain(std::uint64_t key, const std::string& id,
                                                     const Trainer& train) {
  {
    std::lock_guard lock(mutex_);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
  }
  std::optional<std::filesystem::path> file;
  if (cache_dir_) file = *cache_dir_ / "models" / (hex64(key) + ".model");
  std::shared_ptr<const nn::Model> model;
  if (file && std::filesystem::exists(*file)) {
    model = std::make_shared<const nn::Model>(nn::load_model(*file));
  } else {
    try {
      model = std::make_shared<const nn::Model>(train());
    } catch (const NumericError& e) {
      throw NumericError("model " + id + ": " + e.what());
    }
    if (file) nn::save_model(*file, *model);
    std::lock_guard lock(mutex_);
    ++trained_;
  }
  std::lock_guard lock(mutex_);
  return memo_.emplace(key, model).first->second;
}

BuiltPool PoolBuilder::build(PoolSpec spec) {
  if (spec.size == 0) spec.size = cfg_.pool_size;
  const std::size_t m = spec.size;
  const std::size_t k = task_.spec.classes;
  BuiltPool out;
  out.spec = spec;
  out.pool.name = spec.name();
  out.pool.clean.resize(m);
  out.pool.poisoned.resize(m);
  out.twins.resize(m);
  out.twin_accuracy.resize(m);

  auto model_key = [&](const nn::TrainRecipe& r, const std::string& role) {
    std::uint64_t h = combine(task_fingerprint_, r.fingerprint());
    return combine(h, role);
  };

  parallel_for(2 * m, [&](std::size_t job) {
    const std::size_t i = job % m;
    if (job < m) {
      const std::uint64_t seed = derive(spec, "clean", i);
      const nn::TrainRecipe r = cfg_.recipe_for(spec.epsilon, seed);
      auto& member = out.pool.clean[i];
      member.id = "clean-" + std::to_string(i);
      member.role = detector::Role::Clean;
      member.index = i;
      member.seed = seed;
      member.recipe_fingerprint = r.fingerprint();
      member.epsilon = spec.epsilon;
      member.model = obtain(model_key(r, "clean"), out.pool.name + "/" + member.id,
                            [&] { return fit(r, task_.train, task_.val); });
      return;
    }
    const std::uint64_t seed = derive(spec, "poisoned", i);
    const nn::TrainRecipe r = cfg_.recipe_for(spec.epsilon, seed);
    auto twin = obtain(model_key(r, "clean"), out.pool.name + "/twin-" + std::to_string(i),
                       [&] { return fit(r, task_.train, task_.val); });
    const std::size_t target = static_cast<std::size_t>(derive(spec, "target", i) % k);
    const int source = data::select_backdoor_source(*twin, task_.ood, target, derive(spec, "source", i));
    const auto& ood = task_.ood[static_cast<std::size_t>(source)];

    std::uint64_t key = combine(model_key(r, "poisoned"), static_cast<std::uint64_t>(target));
    key = combine(key, static_cast<std::uint64_t>(source));
    if (spec.alpha) key = combine(combine(key, *spec.alpha), twin->fingerprint());

    auto& member = out.pool.poisoned[i];
    member.id = "poisoned-" + std::to_string(i);
    member.role = detector::Role::Poisoned;
    member.index = i;
    member.seed = seed;
    member.recipe_fingerprint = r.fingerprint();
    member.epsilon = spec.epsilon;
    member.backdoor = detector::BackdoorPair{target, source};
    member.alpha = spec.alpha;
    member.model = obtain(key, out.pool.name + "/" + member.id, [&] {
      const auto train = data::poison(task_.train, ood.train, source, target);
      const auto val = data::poison(task_.val, ood.val, source, target);
      if (!spec.alpha) return fit(r, train, val);
      attacks::AdaptiveConfig a;
      a.alpha = *spec.alpha;
      a.reference = twin;
      a.init_from_reference = true;
      return attacks::adaptive_train(r, a, train, val);
    });
    out.twins[i] = twin;
    out.twin_accuracy[i] = nn::accuracy(*twin, task_.test);
  });

  out.pool.validate();
  detector::pool_metrics(out.pool, task_, cfg_.robust_eval_epsilon);
  return out;
}

nlohmann::json manifest(const BuiltPool& built, const ExperimentConfig& cfg) {
  using nlohmann::json;
  json members = json::array();
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  for (const auto* m : built.pool.members()) {
    json e = {{"id", m->id},
              {"role", detector::role_name(m->role)},
              {"index", m->index},
              {"seed", m->seed},
              {"recipe_fingerprint", hex64(m->recipe_fingerprint)},
              {"model_fingerprint", hex64(m->model->fingerprint())},
              {"epsilon", opt(m->epsilon)},
              {"alpha", opt(m->alpha)},
              {"accuracy", m->accuracy},
              {"asr", m->asr},
              {"robust_accuracy", m->robust_accuracy}};
    if (m->backdoor) {
      e["target"] = m->backdoor->target;
      e["source"] = m->backdoor->source;
      e["twin_fingerprint"] = hex64(built.twins[m->index]->fingerprint());
      e["twin_accuracy"] = built.twin_accuracy[m->index];
    }
    members.push_back(e);
  }
  return {{"pool", built.pool.name},
          {"config_fingerprint", hex64(cfg.fingerprint())},
          {"label_base", 0},
          {"members", members}};
}

void write_manifest(const std::filesystem::path& path, const BuiltPool& pool, const ExperimentConfig& cfg) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << manifest(pool, cfg).dump(2) << "\n";
}

}  // namespace semback::harness
