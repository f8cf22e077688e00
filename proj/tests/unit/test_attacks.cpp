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

#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "semback/attacks/adaptive.hpp"
#include "semback/attacks/pgd.hpp"
#include "semback/data/task.hpp"
#include "semback/distances/distances.hpp"
#include "semback/error.hpp"
#include "semback/nn/train.hpp"

using namespace semback;

namespace {

double linf(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

data::Dataset two_clusters(std::size_t per_class, std::uint64_t seed, data::Split split) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 0.05);
  data::Dataset d(2, 2, split);
  const double centers[2][2] = {{0.25, 0.3}, {0.75, 0.7}};
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t i = 0; i < per_class; ++i) {
      const double x[2] = {std::clamp(centers[c][0] + n(rng), 0.0, 1.0),
                           std::clamp(centers[c][1] + n(rng), 0.0, 1.0)};
      d.push_back(x, c);
    }
  return d;
}

struct Fixture {
  data::Task task = data::make_task(testing::small_spec(5));
  nn::TrainRecipe recipe = [] {
    nn::TrainRecipe r;
    r.seed = 9;
    return r;
  }();
  std::shared_ptr<const nn::Model> clean =
      std::make_shared<const nn::Model>(nn::train(recipe, task.train, task.val));
  int source = data::select_backdoor_source(*clean, task.ood, 1, 77);
  data::Dataset train = data::poison(task.train, task.ood[source].train, source, 1);
  data::Dataset val = data::poison(task.val, task.ood[source].val, source, 1);
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

double asr(const nn::Model& m, const Fixture& f) {
  const auto& s = f.task.ood[f.source].test;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < s.size(); ++i) hit += nn::predict(m, s.row(i)) == 1;
  return double(hit) / double(s.size());
}

}  // namespace

TEST_CASE("clipped PGD stays in the epsilon ball and the domain") {
  std::mt19937_64 rng(2);
  int cases = 0;
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const auto model = testing::random_model(seed);
    for (int t = 0; t < 20; ++t, ++cases) {
      const auto x = testing::uniform_vector(rng, 4);
      const double eps = std::uniform_real_distribution<double>(0.01, 0.3)(rng);
      const auto adv = attacks::pgd(model, x, t % 3, attacks::clipped_pgd(eps, eps / 2, 3));
      CHECK(linf(adv, x) <= eps);
      for (const double v : adv) CHECK((v >= 0.0 && v <= 1.0));
    }
  }
  CHECK(cases == 500);
}

TEST_CASE("unclipped PGD moves at most steps times step size") {
  std::mt19937_64 rng(3);
  const auto model = testing::random_model(1);
  for (int t = 0; t < 200; ++t) {
    const auto x = testing::uniform_vector(rng, 4);
    const auto adv = attacks::pgd(model, x, t % 3, attacks::adversarial_set_pgd());
    CHECK(linf(adv, x) <= 0.1);
  }
}

TEST_CASE("PGD increases the loss of a trained model") {
  const auto& f = fixture();
  std::size_t up = 0;
  for (std::size_t i = 0; i < f.task.test.size(); ++i) {
    const auto x = f.task.test.input(i);
    const auto y = f.task.test.labels[i];
    const auto adv = attacks::pgd(*f.clean, x, y, attacks::adversarial_set_pgd());
    up += nn::loss(*f.clean, adv, y) > nn::loss(*f.clean, x, y);
  }
  CHECK(double(up) >= 0.9 * double(f.task.test.size()));
}

TEST_CASE("PGD config validation") {
  CHECK_THROWS_AS(attacks::unclipped_pgd(0.0, 3).validate(), ConfigError);
  CHECK_THROWS_AS(attacks::unclipped_pgd(0.1, 0).validate(), ConfigError);
  CHECK_THROWS_AS(attacks::clipped_pgd(-0.1, 0.1, 1).validate(), ConfigError);
}

TEST_CASE("adversarial training yields robustness") {
  const auto train = two_clusters(200, 1, data::Split::Train);
  const auto val = two_clusters(50, 2, data::Split::Val);
  const auto test = two_clusters(100, 3, data::Split::Test);
  nn::TrainRecipe r;
  r.seed = 6;
  const auto plain = nn::train(r, train, val);
  r.adversarial = nn::AdversarialTraining{0.1, 0.05, 3};
  const auto robust = nn::adv_train(r, train, val);
  const auto eval = attacks::robust_eval_pgd(0.1);
  const double ra = attacks::robust_accuracy(robust, test, eval);
  CHECK(ra >= 0.8);
  CHECK(attacks::robust_accuracy(plain, test, eval) <= ra);
}

TEST_CASE("adaptive loss reduces to cross-entropy and excludes backdoor samples") {
  std::mt19937_64 rng(4);
  const auto model = testing::random_model(2);
  attacks::AdaptiveConfig cfg;
  cfg.reference = std::make_shared<const nn::Model>(testing::random_model(3));
  for (int t = 0; t < 50; ++t) {
    const auto x = testing::uniform_vector(rng, 4);
    const std::size_t y = t % 3;
    const double ce = nn::loss(model, x, y);
    cfg.alpha = 1.0;
    CHECK(attacks::adaptive_loss(x, y, model, cfg, true) == doctest::Approx(ce).epsilon(1e-14));
    cfg.alpha = 0.3;
    CHECK(attacks::adaptive_loss(x, y, model, cfg, false) == doctest::Approx(0.3 * ce).epsilon(1e-14));
    const double dist = distances::sample_distance(distances::SampleDistance::CosL, *cfg.reference, model, x);
    CHECK(attacks::adaptive_loss(x, y, model, cfg, true) == doctest::Approx(0.3 * ce + 0.7 * dist).epsilon(1e-12));
    // Linear in alpha.
    cfg.alpha = 0.0;
    const double l0 = attacks::adaptive_loss(x, y, model, cfg, true);
    cfg.alpha = 1.0;
    const double l1 = attacks::adaptive_loss(x, y, model, cfg, true);
    cfg.alpha = 0.6;
    CHECK(attacks::adaptive_loss(x, y, model, cfg, true) == doctest::Approx(0.4 * l0 + 0.6 * l1).epsilon(1e-12));
  }
  cfg.alpha = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("adaptive loss gradient matches central differences") {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 20; ++t) {
    const auto z = testing::uniform_vector(rng, 5, -3, 3);
    const auto zr = testing::uniform_vector(rng, 5, -3, 3);
    std::vector<double> g(5), scratch(5);
    attacks::adaptive_loss_logits(z, zr, t % 5, 0.4, true, g);
    for (std::size_t j = 0; j < 5; ++j) {
      auto zp = z, zm = z;
      zp[j] += 1e-6;
      zm[j] -= 1e-6;
      const double fd = (attacks::adaptive_loss_logits(zp, zr, t % 5, 0.4, true, scratch) -
                         attacks::adaptive_loss_logits(zm, zr, t % 5, 0.4, true, scratch)) / 2e-6;
      CHECK(g[j] == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("alpha one without reference start reproduces plain poisoned training") {
  const auto& f = fixture();
  attacks::AdaptiveConfig cfg;
  cfg.alpha = 1.0;
  cfg.reference = f.clean;
  cfg.init_from_reference = false;
  const auto adaptive = attacks::adaptive_train(f.recipe, cfg, f.train, f.val);
  const auto plain = nn::train(f.recipe, f.train, f.val);
  CHECK(std::equal(adaptive.parameters().begin(), adaptive.parameters().end(), plain.parameters().begin()));
}

TEST_CASE("adaptive training keeps the backdoor and stays close to the reference") {
  const auto& f = fixture();
  attacks::AdaptiveConfig cfg;
  cfg.reference = f.clean;
  cfg.alpha = 0.5;
  const auto mid = attacks::adaptive_train(f.recipe, cfg, f.train, f.val);
  CHECK(asr(mid, f) >= 0.25);
  CHECK(std::abs(nn::accuracy(mid, f.task.test) - nn::accuracy(*f.clean, f.task.test)) <= 0.05);

  auto mean_cosl = [&](const nn::Model& m) {
    return distances::model_distance(*f.clean, m, f.task.test.inputs, distances::SampleDistance::CosL,
                                     distances::Aggregation::Avg);
  };
  cfg.alpha = 0.9;
  const auto loose = attacks::adaptive_train(f.recipe, cfg, f.train, f.val);
  cfg.alpha = 0.1;
  const auto tight = attacks::adaptive_train(f.recipe, cfg, f.train, f.val);
  CHECK(mean_cosl(loose) > mean_cosl(tight));
}
