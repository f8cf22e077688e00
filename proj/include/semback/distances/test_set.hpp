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
#include <optional>
#include <iosfwd>
#include <string>
#include <vector>

#include "semback/attacks/pgd.hpp"
#include "semback/data/dataset.hpp"
#include "semback/nn/model.hpp"

#include "semback/inversion/config.hpp"

namespace semback::data {
struct Task;
}

namespace semback::distances {

enum class SetKind { Training, Test, Adversarial, Inverted, Random };

inline constexpr SetKind kAllSetKinds[] = {SetKind::Training, SetKind::Test, SetKind::Adversarial,
                                           SetKind::Inverted, SetKind::Random};

const char* name(SetKind kind) noexcept;
SetKind parse_set_kind(const std::string& text);
bool depends_on_model(SetKind kind) noexcept;

/// Bookkeeping for a generated (inverted) sample.
struct GeneratedSample {
  std::size_t label = 0;
  std::size_t reference = 0;  // index into the training split
  int attempt = 0;
  double confidence = 0.0;    // softmax of `label` under the generating model
  double feature_cosine = 0.0;  // cos_sim(h(x*), feature target)
};

struct DistanceTestSet {
  SetKind kind = SetKind::Test;
  data::Samples inputs;
  /// Fingerprint of the model of interest for model-dependent kinds.
  std::optional<std::uint64_t> model_fingerprint;
  std::vector<GeneratedSample> generated;
  std::string variant;  // inversion variant name, empty otherwise

  std::size_t size() const noexcept { return inputs.size(); }
};

struct TestSetConfig {
  attacks::PgdConfig adversarial = attacks::adversarial_set_pgd();
  inversion::InversionConfig inversion;
  /// Seed of the Random kind.
  std::uint64_t random_seed = 0;
};

/// Builds one of the five sets: Training/Test pass the task split through,
/// Adversarial runs unclipped PGD (step 0.01, 10 steps) on every test example
/// against the model of interest, Inverted runs the inversion generator on it,
/// Random draws test-split-many uniform points in [0,1]^d.
DistanceTestSet build_distance_test_set(SetKind kind, const data::Task& task,
                                        const nn::Model* model_of_interest,
                                        const TestSetConfig& cfg);

/// Writes the set as a dataset-like table with generation metadata columns.
void write_test_set(std::ostream& out, const DistanceTestSet& set);
DistanceTestSet read_test_set(std::istream& in);

}  // namespace semback::distances
