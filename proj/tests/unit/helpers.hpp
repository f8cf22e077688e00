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

#include <random>
#include <vector>

#include "semback/data/task.hpp"
#include "semback/nn/model.hpp"
#include "semback/nn/train.hpp"

namespace semback::testing {

// Small task that trains in milliseconds.
inline data::TaskSpec small_spec(std::uint64_t seed = 7) {
  data::TaskSpec s;
  s.dim = 4;
  s.classes = 3;
  s.ood_classes = 4;
  s.train_per_class = 60;
  s.val_per_class = 20;
  s.test_per_class = 20;
  s.min_separation = 0.3;
  s.seed = seed;
  return s;
}

inline nn::TrainRecipe small_recipe(std::uint64_t seed = 1) {
  nn::TrainRecipe r;
  r.hidden = {16, 8};
  r.max_epochs = 30;
  r.batch_size = 32;
  r.seed = seed;
  return r;
}

inline std::vector<double> uniform_vector(std::mt19937_64& rng, std::size_t n, double lo = 0.0,
                                          double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

inline nn::Model random_model(std::uint64_t seed, std::size_t d = 4, std::vector<std::size_t> hidden = {6, 5},
                              std::size_t k = 3) {
  return nn::Model::initialize(nn::classifier_topology(d, std::move(hidden), k), seed);
}

}  // namespace semback::testing
