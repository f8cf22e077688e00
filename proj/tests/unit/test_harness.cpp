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

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "semback/error.hpp"
#include "semback/harness/config.hpp"
#include "semback/harness/experiments.hpp"
#include "semback/harness/pool_builder.hpp"
#include "semback/seed.hpp"

using namespace semback;
using namespace semback::harness;
namespace fs = std::filesystem;

namespace {

ExperimentConfig small_config(std::uint64_t seed = 5) {
  ExperimentConfig c;
  c.task = testing::small_spec();
  c.recipe.max_epochs = 30;
  c.pool_size = 3;
  c.inversion.per_class = 2;
  c.inversion.feature_iterations = 200;
  c.inversion.prior_iterations = 200;
  c.alphas = {0.5, 1.0};
  c.seed = seed;
  return c;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("semback-test-" + name);
  fs::remove_all(dir);
  return dir;
}

std::string grid_text(const std::vector<GridRow>& rows) {
  std::ostringstream s;
  write_grid_csv(s, rows);
  return s.str();
}

}  // namespace

TEST_CASE("config JSON round trip and strictness") {
  auto c = small_config();
  c.epsilons = {std::nullopt, 0.05};
  const auto back = config_from_json(to_json(c));
  CHECK(back.fingerprint() == c.fingerprint());
  CHECK(to_json(back) == to_json(c));
  auto j = to_json(c);
  j["typo"] = 1;
  CHECK_THROWS_AS(config_from_json(j), ConfigError);
  j = to_json(c);
  j["distances"] = {"L2"};
  CHECK_THROWS_AS(config_from_json(j), ConfigError);
  ExperimentConfig unseeded;
  CHECK_THROWS_AS(unseeded.master_seed(), ConfigError);
  auto moved = c;
  moved.output_dir = "elsewhere";
  CHECK(moved.fingerprint() == c.fingerprint());
}

TEST_CASE("pool names") {
  CHECK(PoolSpec{}.name() == "plain");
  CHECK(PoolSpec{0.1, std::nullopt, 0, "pool"}.name() == "robust-eps0.1");
  CHECK(PoolSpec{0.1, 0.5, 0, "pool"}.name() == "adaptive-a0.5-robust-eps0.1");
  CHECK(PoolSpec{0.1, std::nullopt, 0, "size-big"}.name() == "size-big-robust-eps0.1");
}

TEST_CASE("pool building is deterministic and resumable") {
  auto cfg = small_config();
  cfg.pool_size = 2;
  const auto task = data::make_task(cfg.task_spec());
  const auto dir = scratch("pool");
  PoolBuilder first(cfg, task, dir);
  const auto a = first.build(PoolSpec{});
  CHECK(a.pool.clean.size() == 2);
  CHECK(a.pool.poisoned.size() == 2);
  CHECK(first.trained_count() == 6);  // two clean, two poisoned, two twins
  for (const auto& m : a.pool.poisoned) {
    REQUIRE(m.backdoor);
    CHECK(m.backdoor->target < cfg.task.classes);
    CHECK(m.seed == derive_seed(cfg.master_seed(), "poisoned", m.index));
  }
  CHECK(a.pool.clean[1].seed == derive_seed(cfg.master_seed(), "clean", 1));

  PoolBuilder second(cfg, task, dir);
  const auto b = second.build(PoolSpec{});
  CHECK(second.trained_count() == 0);
  CHECK(manifest(a, cfg) == manifest(b, cfg));

  PoolBuilder fresh(cfg, task);
  const auto c = fresh.build(PoolSpec{});
  CHECK(manifest(a, cfg) == manifest(c, cfg));
  fs::remove_all(dir);
}

TEST_CASE("adaptive pools share the clean models") {
  const auto cfg = small_config();
  const auto task = data::make_task(cfg.task_spec());
  PoolBuilder builder(cfg, task);
  const auto base = builder.build(PoolSpec{0.1, std::nullopt, 0, "pool"});
  const auto adaptive = builder.build(PoolSpec{0.1, 0.5, 0, "pool"});
  for (std::size_t i = 0; i < base.pool.clean.size(); ++i)
    CHECK(base.pool.clean[i].model == adaptive.pool.clean[i].model);
  for (std::size_t i = 0; i < base.pool.poisoned.size(); ++i) {
    CHECK(base.twins[i] == adaptive.twins[i]);
    CHECK(adaptive.pool.poisoned[i].alpha == std::optional<double>(0.5));
    CHECK(adaptive.pool.poisoned[i].backdoor->target == base.pool.poisoned[i].backdoor->target);
  }
}

TEST_CASE("grid has one row per cell and reruns identically") {
  const auto cfg = small_config();
  const auto task = data::make_task(cfg.task_spec());
  const auto dir = scratch("grid");
  std::string text;
  {
    PoolBuilder builder(cfg, task, dir);
    SetCache sets(cfg, task, dir / "sets");
    const auto rows = run_grid(builder.build(PoolSpec{}), sets, cfg);
    CHECK(rows.size() == 100);
    std::set<std::uint64_t> fps;
    for (const auto& r : rows) fps.insert(r.fingerprint);
    CHECK(fps.size() == rows.size());
    text = grid_text(rows);
  }
  PoolBuilder builder(cfg, task, dir);
  SetCache sets(cfg, task, dir / "sets");
  CHECK(grid_text(run_grid(builder.build(PoolSpec{}), sets, cfg)) == text);
  CHECK(builder.trained_count() == 0);
  fs::remove_all(dir);
}

TEST_CASE("adaptive sweep filtering and matrix shape") {
  auto cfg = small_config();
  cfg.set_kinds = {distances::SetKind::Test, distances::SetKind::Inverted};
  const auto task = data::make_task(cfg.task_spec());
  PoolBuilder builder(cfg, task);
  SetCache sets(cfg, task);
  const auto sweep = run_adaptive_sweep(builder, sets, cfg);
  const std::size_t attacks = 1 + cfg.alphas.size();
  CHECK(sweep.pools.size() == attacks);
  CHECK(sweep.matrix.size() == attacks * attacks * cfg.asr_floors.size());
  CHECK(sweep.rows.size() == attacks * cfg.asr_floors.size() * 2 * 20);
  for (const auto& r : sweep.rows) {
    CHECK(r.well_defined == (r.poisoned >= 2));
    // Filtering never adds models.
    CHECK(r.poisoned <= cfg.pool_size);
    for (const auto& other : sweep.rows)
      if (other.pool == r.pool && other.set == r.set && other.distance == r.distance &&
          other.aggregation == r.aggregation && other.asr_floor > r.asr_floor)
        CHECK(other.poisoned <= r.poisoned);
  }
  // Unit alpha collapses to cross-entropy: its poisoned models carry the backdoor.
  const auto& unit = sweep.pools.back();
  REQUIRE(unit.spec.alpha == std::optional<double>(1.0));
  for (const auto& m : unit.pool.poisoned) CHECK(m.asr >= 0.8);
}

TEST_CASE("stats table") {
  const auto rows = stats_table(28);
  REQUIRE(rows.size() == 15);
  CHECK(rows.front().correct == 14);
  CHECK(rows[10].correct == 24);
  CHECK(fixed(rows[10].significance.j, 2) == "0.71");
  CHECK(fixed(rows[10].significance.p_value, 9) == "0.000089996");
  CHECK(fixed(rows[10].significance.ci_infimum, 2) == "0.40");
  const auto two = stats_table(2);
  REQUIRE(two.size() == 2);
  CHECK(two.back().significance.p_value == doctest::Approx(0.25));
  CHECK(stats_table(5).front().correct == 3);
  CHECK_THROWS_AS(stats_table(0), ConfigError);
}
