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

namespace semback::inversion {

struct InversionConfig {
  /// Balance between the cosine term and the softmax term in both steps.
  double gamma = 0.1;
  int feature_iterations = 1000;
  double feature_learning_rate = 0.01;
  /// Standard deviation of the noise added to h(x) to start the feature search.
  double feature_init_noise = 0.01;
  int prior_iterations = 1000;
  double prior_learning_rate = 0.01;
  std::size_t per_class = 10;
  double confidence_floor = 0.5;
  /// Attempts per emitted sample, each with a new random reference example.
  int max_attempts = 10;
  /// Prior generator: fixed seed vector of this size through dense hidden
  /// layers to a sigmoid output in [0,1]^d.
  std::size_t generator_seed_dim = 16;
  std::vector<std::size_t> generator_hidden{32, 32};
  /// Start the generator (or the direct search) at the reference example.
  bool start_at_reference = false;
  /// Factor on the generator's output-layer weights when starting at a point.
  double generator_output_scale = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
};

}  // namespace semback::inversion
