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

#include <cmath>
#include <limits>

#include "doctest.h"
#include "helpers.hpp"
#include "semback/data/task.hpp"
#include "semback/distances/distances.hpp"
#include "semback/error.hpp"
#include "semback/inversion/inversion.hpp"
#include "semback/nn/train.hpp"

using namespace semback;
using inversion::Variant;

namespace {

struct Fixture {
  data::Task task = data::make_task(testing::small_spec(3));
  nn::Model model = [this] {
    nn::TrainRecipe r;
    r.seed = 2;
    return nn::train(r, task.train, task.val);
  }();
  inversion::InversionConfig cfg = [] {
    inversion::InversionConfig c;
    c.per_class = 4;
    c.seed = 99;
    return c;
  }();
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

double confidence(const nn::Model& m, std::span<const double> x, std::size_t y) { return nn::forward(m, x).probs[y]; }

}  // namespace

TEST_CASE("feature inversion objective") {
  const auto& f = fixture();
  for (std::size_t i = 0; i < 6; ++i) {
    const std::size_t idx = i * 37 % f.task.train.size();
    const auto x = f.task.train.input(idx);
    const auto y = f.task.train.labels[idx];
    const auto h = nn::forward(f.model, x).features;

    const auto def = inversion::invert_features(f.model, x, y, f.cfg, 10 + i);
    CHECK(def.objective <= def.initial_objective);
    CHECK(def.confidence >= 0.5);
    CHECK(def.cosine_to_reference < def.initial_cosine);
    CHECK(def.target.size() == f.model.feature_dim());
    CHECK(def.cosine_to_reference == doctest::Approx(distances::cosine_similarity(h, def.target)).epsilon(1e-9));

    auto c = f.cfg;
    c.gamma = 0.0;
    CHECK(inversion::invert_features(f.model, x, y, c, 10 + i).confidence >= 0.99);
    c.gamma = 1000.0;
    CHECK(inversion::invert_features(f.model, x, y, c, 10 + i).cosine_to_reference <= 0.1);
  }
}

TEST_CASE("prior fit ascends and stays in the box") {
  const auto& f = fixture();
  const auto x = f.task.train.input(5);
  const auto y = f.task.train.labels[5];
  const auto inv = inversion::invert_features(f.model, x, y, f.cfg, 1);
  const auto fit = inversion::fit_prior(f.model, inv.target, y, f.cfg, 2);
  CHECK(fit.objective >= fit.initial_objective);
  REQUIRE(fit.sample.size() == f.task.spec.dim);
  for (const double v : fit.sample) CHECK((v >= 0.0 && v <= 1.0));
  CHECK(fit.confidence == doctest::Approx(confidence(f.model, fit.sample, y)).epsilon(1e-12));

  const auto direct = inversion::fit_direct(f.model, inv.target, y, f.cfg, 2);
  CHECK(direct.objective >= direct.initial_objective);
  for (const double v : direct.sample) CHECK((v >= 0.0 && v <= 1.0));
}

TEST_CASE("inverted set contract and determinism") {
  const auto& f = fixture();
  const auto set = inversion::generate_inverted_set(f.model, f.task.train, f.cfg);
  const std::size_t k = f.task.spec.classes;
  REQUIRE(set.size() == k * f.cfg.per_class);
  CHECK(set.kind == distances::SetKind::Inverted);
  CHECK(set.model_fingerprint == std::optional<std::uint64_t>(f.model.fingerprint()));
  std::vector<std::size_t> per(k, 0);
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto& g = set.generated[i];
    ++per[g.label];
    CHECK(confidence(f.model, set.inputs.row(i), g.label) >= 0.5);
    CHECK(f.task.train.labels[g.reference] == g.label);
  }
  for (const auto c : per) CHECK(c == f.cfg.per_class);
  const auto again = inversion::generate_inverted_set(f.model, f.task.train, f.cfg);
  CHECK(again.inputs == set.inputs);
  auto other = f.cfg;
  other.seed += 1;
  CHECK_FALSE(inversion::generate_inverted_set(f.model, f.task.train, other).inputs == set.inputs);
}

TEST_CASE("ablation variants emit the same shape") {
  const auto& f = fixture();
  const std::size_t n = f.task.spec.classes * f.cfg.per_class;
  for (const auto v : {Variant::WithoutPrior, Variant::SingleStep, Variant::InvertOnly}) {
    CAPTURE(inversion::variant_name(v));
    const auto set = inversion::generate_inverted_ablation(f.model, f.task.train, f.cfg, v);
    CHECK(set.size() == n);
    CHECK(set.variant == inversion::variant_name(v));
    for (const double x : set.inputs.values()) CHECK((x >= 0.0 && x <= 1.0));
    if (v != Variant::InvertOnly)
      for (std::size_t i = 0; i < set.size(); ++i)
        CHECK(confidence(f.model, set.inputs.row(i), set.generated[i].label) >= 0.5);
    CHECK(inversion::generate_inverted_ablation(f.model, f.task.train, f.cfg, v).inputs == set.inputs);
  }
  CHECK(inversion::parse_variant("single-step") == Variant::SingleStep);
  CHECK_THROWS_AS(inversion::parse_variant("nope"), ConfigError);
}

TEST_CASE("uninformative model exhausts the retry budget") {
  const auto& f = fixture();
  const auto flat = nn::Model::zeros(f.model.topology());
  auto c = f.cfg;
  c.max_attempts = 2;
  c.feature_iterations = 20;
  c.prior_iterations = 20;
  CHECK_THROWS_AS(inversion::generate_inverted_set(flat, f.task.train, c), GenerationExhausted);
  c.confidence_floor = 1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}
