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

#include "semback/data/task.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "semback/error.hpp"
#include "semback/seed.hpp"

namespace semback::data {

void TaskSpec::validate() const {
  if (dim == 0) throw ConfigError("task: dimension must be positive");
  if (classes < 2) throw ConfigError("task: at least two classes are required");
  if (ood_classes < 2) throw ConfigError("task: at least two OOD classes are required");
  if (spread < 0.0) throw ConfigError("task: spread must be non-negative");
  if (min_separation < 0.0) throw ConfigError("task: minimum separation must be non-negative");
  if (center_margin < 0.0 || center_margin >= 0.5) throw ConfigError("task: margin must be in [0, 0.5)");
  if (train_per_class == 0) throw ConfigError("task: train split must be non-empty");
}

std::uint64_t TaskSpec::fingerprint() const {
  std::ostringstream s;
  s << dim << '|' << classes << '|' << ood_classes << '|' << train_per_class << '|'
    << val_per_class << '|' << test_per_class << '|' << format_double(spread) << '|'
    << format_double(min_separation) << '|' << format_double(center_margin) << '|'
    << max_placement_attempts << '|' << seed;
  return fnv1a(s.str());
}

namespace {

Samples place_centers(const TaskSpec& spec, std::mt19937_64& rng) {
  const std::size_t total = spec.classes + spec.ood_classes;
  std::uniform_real_distribution<double> uniform(spec.center_margin, 1.0 - spec.center_margin);
  Samples centers(spec.dim);
  std::vector<double> c(spec.dim);
  int attempts = 0;
  while (centers.size() < total) {
    if (attempts++ >= spec.max_placement_attempts)
      throw DataError("task: could not place " + std::to_string(total) +
                      " cluster centers with separation " + format_double(spec.min_separation));
    for (auto& v : c) v = uniform(rng);
    bool ok = true;
    for (std::size_t j = 0; j < centers.size() && ok; ++j) {
      double d2 = 0.0;
      const auto other = centers.row(j);
      for (std::size_t i = 0; i < spec.dim; ++i) d2 += (c[i] - other[i]) * (c[i] - other[i]);
      ok = std::sqrt(d2) >= spec.min_separation;
    }
    if (ok) centers.push_back(c);
  }
  return centers;
}

// Truncated isotropic Gaussian around a center by coordinate-wise resampling.
void draw_point(std::span<const double> center, double spread, std::mt19937_64& rng,
                std::span<double> out) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < center.size(); ++i) {
    double v;
    do {
      v = center[i] + spread * normal(rng);
    } while (v < 0.0 || v > 1.0);
    out[i] = v;
  }
}

Samples draw_cluster(std::span<const double> center, double spread, std::size_t count,
                     std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Samples s(center.size());
  s.reserve(count);
  std::vector<double> x(center.size());
  for (std::size_t n = 0; n < count; ++n) {
    draw_point(center, spread, rng, x);
    s.push_back(x);
  }
  return s;
}

}  // namespace

Task make_task(const TaskSpec& spec) {
  spec.validate();
  Task task;
  task.spec = spec;
  std::mt19937_64 rng(derive_seed(spec.seed, "centers"));
  const Samples centers = place_centers(spec, rng);
  task.clean_centers = Samples(spec.dim);
  task.ood_centers = Samples(spec.dim);
  for (std::size_t c = 0; c < spec.classes; ++c) task.clean_centers.push_back(centers.row(c));
  for (std::size_t c = 0; c < spec.ood_classes; ++c)
    task.ood_centers.push_back(centers.row(spec.classes + c));

  task.train = Dataset(spec.dim, spec.classes, Split::Train);
  task.val = Dataset(spec.dim, spec.classes, Split::Val);
  task.test = Dataset(spec.dim, spec.classes, Split::Test);
  const struct {
    Dataset* target;
    std::size_t count;
    const char* role;
  } splits[] = {{&task.train, spec.train_per_class, "train"},
                {&task.val, spec.val_per_class, "val"},
                {&task.test, spec.test_per_class, "test"}};
  for (const auto& split : splits) {
    for (std::size_t c = 0; c < spec.classes; ++c) {
      const Samples s = draw_cluster(task.clean_centers.row(c), spec.spread, split.count,
                                     derive_seed(spec.seed, std::string("clean-") + split.role, c));
      for (std::size_t n = 0; n < s.size(); ++n) split.target->push_back(s.row(n), c);
    }
  }
  for (std::size_t c = 0; c < spec.ood_classes; ++c) {
    OodPool pool;
    pool.source = static_cast<int>(c);
    const auto center = task.ood_centers.row(c);
    pool.train = draw_cluster(center, spec.spread, spec.train_per_class, derive_seed(spec.seed, "ood-train", c));
    pool.val = draw_cluster(center, spec.spread, spec.val_per_class, derive_seed(spec.seed, "ood-val", c));
    pool.test = draw_cluster(center, spec.spread, spec.test_per_class, derive_seed(spec.seed, "ood-test", c));
    task.ood.push_back(std::move(pool));
  }
  return task;
}

std::vector<double> natural_backdoor_rates(const nn::Model& clean_model,
                                           const std::vector<OodPool>& ood, std::size_t target) {
  nn::check_label(clean_model, target);
  std::vector<double> rates;
  nn::Trace trace;
  for (const auto& pool : ood) {
    if (pool.train.empty()) {
      rates.push_back(0.0);
      continue;
    }
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pool.train.size(); ++i) {
      nn::forward(clean_model, pool.train.row(i), trace);
      hits += nn::argmax(trace.output()) == target;
    }
    rates.push_back(static_cast<double>(hits) / static_cast<double>(pool.train.size()));
  }
  return rates;
}

int select_backdoor_source(const nn::Model& clean_model, const std::vector<OodPool>& ood,
                           std::size_t target, std::uint64_t seed) {
  if (ood.size() < 2) throw DataError("backdoor selection needs at least two OOD classes");
  const auto rates = natural_backdoor_rates(clean_model, ood, target);
  const std::size_t excluded = nn::argmax(rates);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, ood.size() - 2);
  std::size_t choice = pick(rng);
  if (choice >= excluded) ++choice;
  return ood[choice].source;
}

Dataset poison(const Dataset& clean, const Samples& ood_samples, int source, std::size_t target) {
  if (target >= clean.classes) throw LabelError("poison: target class out of range");
  if (ood_samples.empty()) throw DataError("poison: empty backdoor sample pool");
  if (ood_samples.dim() != clean.dim()) throw ShapeError("poison: OOD samples have the wrong dimension");
  Dataset out = clean;
  out.inputs.reserve(clean.size() + ood_samples.size());
  for (std::size_t i = 0; i < ood_samples.size(); ++i)
    out.push_back(ood_samples.row(i), target, true, source);
  out.target = target;
  return out;
}

std::vector<int> assign_multiclass_sources(const nn::Model& clean_model,
                                           const std::vector<OodPool>& ood, std::size_t classes,
                                           std::uint64_t seed) {
  if (ood.size() < classes)
    throw DataError("multi-class poisoning: " + std::to_string(ood.size()) +
                    " OOD classes cannot serve " + std::to_string(classes) + " targets");
  std::vector<std::size_t> excluded(classes);
  for (std::size_t t = 0; t < classes; ++t)
    excluded[t] = nn::argmax(natural_backdoor_rates(clean_model, ood, t));

  std::mt19937_64 rng(seed);
  std::vector<std::vector<std::size_t>> candidates(classes);
  for (std::size_t t = 0; t < classes; ++t) {
    for (std::size_t s = 0; s < ood.size(); ++s)
      if (s != excluded[t]) candidates[t].push_back(s);
    std::shuffle(candidates[t].begin(), candidates[t].end(), rng);
  }
  std::vector<std::size_t> order(classes);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<int> assignment(classes, -1);
  std::vector<bool> used(ood.size(), false);
  // Depth-first search over the shuffled candidate lists.
  auto search = [&](auto&& self, std::size_t depth) -> bool {
    if (depth == classes) return true;
    const std::size_t t = order[depth];
    for (const std::size_t s : candidates[t]) {
      if (used[s]) continue;
      used[s] = true;
      assignment[t] = static_cast<int>(s);
      if (self(self, depth + 1)) return true;
      used[s] = false;
    }
    assignment[t] = -1;
    return false;
  };
  if (!search(search, 0))
    throw DataError("multi-class poisoning: no assignment of distinct OOD sources exists");
  for (auto& a : assignment) a = ood[static_cast<std::size_t>(a)].source;
  return assignment;
}

MulticlassPoisoning poison_multiclass(const Dataset& clean_train, const Dataset& clean_val,
                                      const std::vector<OodPool>& ood,
                                      const nn::Model& clean_model, std::uint64_t seed) {
  MulticlassPoisoning out;
  out.sources = assign_multiclass_sources(clean_model, ood, clean_train.classes, seed);
  out.train = clean_train;
  out.val = clean_val;
  for (std::size_t t = 0; t < out.sources.size(); ++t) {
    const auto& pool = ood[static_cast<std::size_t>(out.sources[t])];
    for (std::size_t i = 0; i < pool.train.size(); ++i) out.train.push_back(pool.train.row(i), t, true, pool.source);
    for (std::size_t i = 0; i < pool.val.size(); ++i) out.val.push_back(pool.val.row(i), t, true, pool.source);
  }
  return out;
}

}  // namespace semback::data
