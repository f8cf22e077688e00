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
#include <limits>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "semback/detector/calibration.hpp"
#include "semback/detector/detection.hpp"
#include "semback/detector/pool.hpp"
#include "semback/detector/significance.hpp"
#include "semback/distances/test_set.hpp"
#include "semback/error.hpp"

using namespace semback;
using namespace semback::detector;

namespace {

double direct_j(const std::vector<double>& clean, const std::vector<double>& poisoned, double nu) {
  double tp = 0, tn = 0;
  for (const double s : poisoned) tp += s > nu;
  for (const double s : clean) tn += !(s > nu);
  return tp / double(poisoned.size()) + tn / double(clean.size()) - 1.0;
}

// Synthetic distance grid: rows 0..m-1 clean, m..2m-1 poisoned; the distance
// from row r to clean column c is |level(r) - level(c)|.
PoolDistances synthetic(const std::vector<double>& level, std::size_t m) {
  PoolDistances d;
  d.rows = 2 * m;
  d.columns = m;
  for (std::size_t r = 0; r < d.rows; ++r) d.poisoned.push_back(r >= m);
  for (std::size_t c = 0; c < m; ++c) d.column_row.push_back(c);
  for (std::size_t r = 0; r < d.rows; ++r)
    for (std::size_t c = 0; c < m; ++c) d.values.push_back(r == c ? 0.0 : std::abs(level[r] - level[c]));
  return d;
}

}  // namespace

TEST_CASE("calibration examples") {
  auto c = calibrate_threshold(std::vector<double>{1, 2}, std::vector<double>{3, 4});
  CHECK(c.j == 1.0);
  CHECK(c.threshold == 2.5);
  c = calibrate_threshold(std::vector<double>{1, 3}, std::vector<double>{2, 4});
  CHECK(c.j == 0.5);
  CHECK(c.threshold == 3.5);
  c = calibrate_threshold(std::vector<double>{5}, std::vector<double>{5});
  CHECK(c.j == 0.0);
  CHECK(std::isfinite(c.threshold));
  CHECK_THROWS_AS(calibrate_threshold(std::vector<double>{}, std::vector<double>{1}), PoolError);
  CHECK_THROWS_AS(calibrate_threshold(std::vector<double>{std::nan("")}, std::vector<double>{1}), NumericError);
}

TEST_CASE("calibration matches a brute-force scan") {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> size(1, 30), grid(0, 12);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> clean(size(rng)), poisoned(size(rng));
    for (auto& s : clean) s = grid(rng) * 0.25;
    for (auto& s : poisoned) s = grid(rng) * 0.25 + (t % 3) * 0.5;
    std::vector<double> u(clean);
    u.insert(u.end(), poisoned.begin(), poisoned.end());
    std::sort(u.begin(), u.end());
    u.erase(std::unique(u.begin(), u.end()), u.end());
    const std::size_t n = u.size();
    std::vector<double> piece_j(n + 1);
    piece_j[0] = direct_j(clean, poisoned, u[0] - 1.0);
    for (std::size_t p = 1; p < n; ++p) piece_j[p] = direct_j(clean, poisoned, (u[p - 1] + u[p]) / 2);
    piece_j[n] = direct_j(clean, poisoned, u[n - 1] + 1.0);
    double best = -2;
    for (std::size_t p = 0; p <= n; ++p) best = std::max(best, piece_j[p]);
    for (const double v : u) best = std::max(best, direct_j(clean, poisoned, v));

    const auto c = calibrate_threshold(clean, poisoned);
    CHECK(c.j == doctest::Approx(best).epsilon(1e-12));
    CHECK(direct_j(clean, poisoned, c.threshold) == doctest::Approx(best).epsilon(1e-12));

    // Topmost run of optimal pieces is the interval with the greatest midpoint.
    std::size_t last = n;
    while (std::abs(piece_j[last] - best) > 1e-12) --last;
    std::size_t first = last;
    while (first > 0 && std::abs(piece_j[first - 1] - best) <= 1e-12) --first;
    const double lo = first == 0 ? -std::numeric_limits<double>::infinity() : u[first - 1];
    const double hi = last == n ? std::numeric_limits<double>::infinity() : u[last];
    CHECK(c.threshold >= lo);
    CHECK(c.threshold < hi);
    if (first > 0 && last < n) CHECK(c.threshold == doctest::Approx((lo + hi) / 2));
  }
}

TEST_CASE("confusion counts") {
  const auto c = confusion(std::vector<double>{1, 2, 3}, std::vector<double>{2.5, 4}, 2.0);
  CHECK(c.true_negative == 2);
  CHECK(c.false_positive == 1);
  CHECK(c.true_positive == 2);
  CHECK(c.false_negative == 0);
  CHECK(c.j() == doctest::Approx(2.0 / 3.0));
  CHECK(c.correct() == 4);
  CHECK_FALSE(is_flagged(2.0, 2.0));
  CHECK(is_flagged(2.0001, 2.0));
}

TEST_CASE("binomial significance") {
  struct Row {
    std::size_t correct;
    double j, p, ci;
  };
  const Row rows[] = {{14, 0.00, 0.574722990, -0.33}, {19, 0.36, 0.043579277, 0.01},
                      {24, 0.71, 0.000089996, 0.40},  {28, 1.00, 0.000000004, 0.80}};
  for (const auto& r : rows) {
    const auto s = binomial_p(r.correct, 28);
    CHECK(std::round(s.j * 100) / 100 == doctest::Approx(r.j));
    CHECK(std::abs(s.p_value - r.p) <= 5e-10);
    CHECK(std::abs(s.ci_infimum - r.ci) <= 0.01);
  }
  CHECK(binomial_p(2, 2).p_value == doctest::Approx(0.25));
  CHECK(binomial_p(0, 5).p_value == doctest::Approx(1.0));
  CHECK(binomial_upper_tail(10, 0, 0.3) == doctest::Approx(1.0));
  CHECK_THROWS_AS(binomial_p(6, 5), ConfigError);
}

TEST_CASE("score is the median distance to the other clean models") {
  std::mt19937_64 rng(4);
  const auto a = testing::random_model(1), b = testing::random_model(2), c = testing::random_model(3);
  distances::DistanceTestSet set;
  set.inputs = data::Samples(4);
  for (int i = 0; i < 30; ++i) set.inputs.push_back(testing::uniform_vector(rng, 4));
  const auto d = [&](const nn::Model& x, const nn::Model& y) {
    return distances::model_distance(x, y, set.inputs, distances::SampleDistance::CosL, distances::Aggregation::Std);
  };
  const nn::Model* one[] = {&b};
  CHECK(score(a, one, set, distances::SampleDistance::CosL, distances::Aggregation::Std) == doctest::Approx(d(a, b)));
  const nn::Model* with_self[] = {&a, &b, &c};
  CHECK(score(a, with_self, set, distances::SampleDistance::CosL, distances::Aggregation::Std) ==
        doctest::Approx((d(b, a) + d(c, a)) / 2).epsilon(1e-12));
  const nn::Model* self_only[] = {&a};
  CHECK_THROWS_AS(score(a, self_only, set, distances::SampleDistance::CosL, distances::Aggregation::Std), PoolError);
  CHECK(median(std::vector<double>{3, 1, 2}) == 2.0);
}

TEST_CASE("leave-one-out on separated pools") {
  const std::size_t m = 5;
  std::vector<double> level;
  for (std::size_t i = 0; i < m; ++i) level.push_back(0.01 * i);
  for (std::size_t i = 0; i < m; ++i) level.push_back(1.0 + 0.01 * i);
  const auto report = loo_evaluate(synthetic(level, m));
  CHECK(report.j() == 1.0);
  CHECK(report.confusion.fpr() == 0.0);
  CHECK(report.confusion.fnr() == 0.0);
  CHECK(report.scores.size() == 2 * m);
  CHECK(report.fold_thresholds.size() == 2 * m);
  CHECK(report.significance.p_value == doctest::Approx(binomial_p(2 * m, 2 * m).p_value));
}

TEST_CASE("leave-one-out needs two models of each role beyond the held-out one") {
  std::vector<double> level{0.0, 0.1, 1.0, 1.1};
  CHECK_THROWS_AS(loo_evaluate(synthetic(level, 2)), PoolError);
}

TEST_CASE("coin-flip scores are not significant") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0, 1);
  int insignificant = 0;
  const int seeds = 100;
  for (int s = 0; s < seeds; ++s) {
    std::vector<double> level(28);
    for (auto& v : level) v = u(rng);
    // Constant rows: every score equals its row level whatever the exclusions.
    auto d = synthetic(level, 14);
    for (std::size_t r = 0; r < d.rows; ++r)
      for (std::size_t c = 0; c < d.columns; ++c) d.values[r * d.columns + c] = level[r];
    insignificant += loo_evaluate(d).significance.p_value > 0.05;
  }
  CHECK(insignificant >= 90);
}

TEST_CASE("row restriction and cross evaluation") {
  const std::size_t m = 4;
  std::vector<double> level{0.0, 0.01, 0.02, 0.03, 1.0, 1.01, 1.02, 1.03};
  const auto d = synthetic(level, m);
  const std::size_t keep[] = {0, 1, 2, 4, 5, 6};
  const auto sub = restrict_rows(d, keep);
  CHECK(sub.rows == 6);
  CHECK(sub.columns == 3);
  CHECK(sub.at(3, 0) == d.at(4, 0));
  const std::size_t authority[] = {0, 1, 2, 3, 4, 5};
  const std::size_t provider[] = {0, 1, 2, 3, 6, 7};
  const auto c = cross_evaluate(d, authority, provider);
  CHECK(c.j() == 1.0);
}

TEST_CASE("pool size study") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0, 0.2);
  std::vector<double> level;
  for (int i = 0; i < 13; ++i) level.push_back(n(rng));
  for (int i = 0; i < 13; ++i) level.push_back(1.0 + n(rng));
  const auto d = synthetic(level, 13);
  std::vector<std::size_t> big, test;
  for (std::size_t i = 0; i < 8; ++i) big.push_back(i), big.push_back(13 + i);
  for (std::size_t i = 8; i < 13; ++i) test.push_back(i), test.push_back(13 + i);
  const std::size_t ms[] = {2, 4, 8};
  const auto rows = pool_size_study(d, big, test, ms, 50, 1);
  REQUIRE(rows.size() == 3);
  for (const auto& r : rows) {
    CHECK(r.resamples == 50);
    CHECK(r.min_j <= r.mean_j);
    CHECK(r.mean_j <= r.max_j);
  }
  CHECK(rows.back().min_j == rows.back().max_j);
  const auto again = pool_size_study(d, big, test, ms, 50, 1);
  CHECK(again[0].mean_j == rows[0].mean_j);
  const std::size_t too_big[] = {9};
  CHECK_THROWS_AS(pool_size_study(d, big, test, too_big, 5, 1), PoolError);
}

TEST_CASE("ASR filter is monotone") {
  ModelPool pool;
  pool.name = "p";
  for (int i = 0; i < 4; ++i) {
    PoolMember m;
    m.id = "poisoned-" + std::to_string(i);
    m.role = Role::Poisoned;
    m.index = i;
    m.model = std::make_shared<const nn::Model>(testing::random_model(i));
    m.asr = 0.2 * i;
    pool.poisoned.push_back(m);
  }
  std::size_t previous = pool.poisoned.size();
  for (const double floor : {0.0, 0.25, 0.5, 0.9}) {
    const auto f = filter_by_asr(pool, floor);
    CHECK(f.poisoned.size() <= previous);
    for (const auto& m : f.poisoned) CHECK(m.asr >= floor);
    previous = f.poisoned.size();
  }
  CHECK(parse_role(role_name(Role::Poisoned)) == Role::Poisoned);
}
