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
#include <numeric>
#include <random>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "semback/data/task.hpp"
#include "semback/error.hpp"
#include "semback/nn/model.hpp"
#include "semback/nn/serialize.hpp"
#include "semback/nn/train.hpp"

using namespace semback;

namespace {

double relative_error(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  if (scale < 1e-7) return std::abs(a - b);
  return std::abs(a - b) / scale;
}

data::Dataset two_clusters(std::size_t per_class, std::uint64_t seed, data::Split split) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 0.05);
  data::Dataset d(2, 2, split);
  const double centers[2][2] = {{0.25, 0.3}, {0.75, 0.7}};
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t i = 0; i < per_class; ++i) {
      const double x[2] = {centers[c][0] + n(rng), centers[c][1] + n(rng)};
      d.push_back(x, c);
    }
  return d;
}

}  // namespace

TEST_CASE("softmax is normalized and argmax is consistent") {
  std::mt19937_64 rng(1);
  const auto model = testing::random_model(3);
  for (int t = 0; t < 100; ++t) {
    const auto x = testing::uniform_vector(rng, 4, -3, 3);
    const auto out = nn::forward(model, x);
    CHECK(std::accumulate(out.probs.begin(), out.probs.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(nn::argmax(out.logits) == nn::argmax(out.probs));
    CHECK(nn::predict(model, x) == nn::argmax(out.logits));
  }
  const std::vector<double> huge{1e308, -1e308, 0.0};
  const auto p = nn::softmax(huge);
  CHECK(p[0] == doctest::Approx(1.0));
}

TEST_CASE("analytic gradients match central differences") {
  std::mt19937_64 rng(11);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto model = testing::random_model(seed, 5, {7, 6}, 4);
    const auto x = testing::uniform_vector(rng, 5);
    const std::size_t y = seed % 4;
    const auto gp = nn::grad(model, x, y, nn::Wrt::Parameters);
    const auto gx = nn::grad(model, x, y, nn::Wrt::Input);
    const double h = 1e-5;
    std::uniform_int_distribution<std::size_t> pick(0, gp.size() - 1);
    for (int t = 0; t < 50; ++t) {
      const std::size_t i = pick(rng);
      auto params = model.mutable_parameters();
      const double keep = params[i];
      params[i] = keep + h;
      const double up = nn::loss(model, x, y);
      params[i] = keep - h;
      const double down = nn::loss(model, x, y);
      params[i] = keep;
      CHECK(relative_error(gp[i], (up - down) / (2 * h)) < 1e-4);
    }
    for (std::size_t j = 0; j < x.size(); ++j) {
      auto xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      const double fd = (nn::loss(model, xp, y) - nn::loss(model, xm, y)) / (2 * h);
      CHECK(relative_error(gx[j], fd) < 1e-4);
    }
  }
}

TEST_CASE("shape and label errors") {
  const auto model = testing::random_model(0);
  const std::vector<double> bad(3, 0.5), good(4, 0.5);
  CHECK_THROWS_AS(nn::forward(model, bad), ShapeError);
  CHECK_THROWS_AS(nn::loss(model, good, 3), LabelError);
  CHECK_THROWS_AS(nn::Model(model.topology(), std::vector<double>(2)), ShapeError);
}

TEST_CASE("training on separable clusters") {
  const auto train = two_clusters(200, 1, data::Split::Train);
  const auto val = two_clusters(50, 2, data::Split::Val);
  const auto test = two_clusters(100, 3, data::Split::Test);
  nn::TrainRecipe recipe;
  recipe.seed = 4;
  const auto model = nn::train(recipe, train, val);
  CHECK(nn::accuracy(model, test) >= 0.99);

  SUBCASE("bit-for-bit determinism") {
    const auto again = nn::train(recipe, train, val);
    CHECK(std::equal(model.parameters().begin(), model.parameters().end(), again.parameters().begin()));
  }
  SUBCASE("zero epochs returns the initialization") {
    recipe.max_epochs = 0;
    const auto init = nn::initial_model(recipe, 2, 2);
    const auto out = nn::train(recipe, train, val);
    CHECK(std::equal(out.parameters().begin(), out.parameters().end(), init.parameters().begin()));
  }
  SUBCASE("best-validation model is no worse than the final epoch") {
    recipe.patience = recipe.max_epochs + 1;
    const auto best = nn::train(recipe, train, val);
    recipe.patience = 0;
    const auto last = nn::train(recipe, train, val);
    CHECK(nn::mean_cross_entropy(best, val) <= nn::mean_cross_entropy(last, val));
  }
  SUBCASE("epsilon zero adversarial training equals plain training") {
    recipe.adversarial = nn::AdversarialTraining{0.0, 0.01, 3};
    const auto adv = nn::adv_train(recipe, train, val);
    CHECK(std::equal(adv.parameters().begin(), adv.parameters().end(), model.parameters().begin()));
  }
}

TEST_CASE("learning rate schedule") {
  nn::TrainRecipe r;
  r.max_epochs = 10;
  CHECK(nn::scheduled_learning_rate(r, 0) == doctest::Approx(r.learning_rate));
  CHECK(nn::scheduled_learning_rate(r, 9) < nn::scheduled_learning_rate(r, 5));
  r.cosine_annealing = false;
  CHECK(nn::scheduled_learning_rate(r, 9) == r.learning_rate);
}

TEST_CASE("recipe validation") {
  nn::TrainRecipe r;
  r.learning_rate = 0.0;
  CHECK_THROWS_AS(r.validate(), ConfigError);
  r = {};
  r.batch_size = 0;
  CHECK_THROWS_AS(r.validate(), ConfigError);
}

TEST_CASE("serialization round-trips bit-exactly") {
  auto model = testing::random_model(42, 4, {5, 3}, 3);
  model.set_recipe_fingerprint(0xfeedULL);
  std::stringstream s;
  nn::write_model(s, model);
  const auto back = nn::read_model(s);
  CHECK(back.topology() == model.topology());
  CHECK(back.seed() == model.seed());
  CHECK(back.recipe_fingerprint() == model.recipe_fingerprint());
  CHECK(back.fingerprint() == model.fingerprint());
  CHECK(std::equal(back.parameters().begin(), back.parameters().end(), model.parameters().begin()));
  std::stringstream broken("semback-model 1\ngarbage\n");
  CHECK_THROWS(nn::read_model(broken));
}
