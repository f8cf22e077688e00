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

// Command-line driver: task generation, pool building, and the experiment grids.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "semback/data/task.hpp"
#include "semback/error.hpp"
#include "semback/harness/config.hpp"
#include "semback/harness/experiments.hpp"
#include "semback/harness/pool_builder.hpp"
#include "semback/nn/serialize.hpp"
#include "semback/seed.hpp"

namespace fs = std::filesystem;
using namespace semback;
using harness::ExperimentConfig;

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::size_t> pool_size;
  std::string epsilon;  // "none" or a number; empty keeps the default
  std::optional<double> alpha;
};

std::optional<double> parse_epsilon(const std::string& text) {
  if (text == "none") return std::nullopt;
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("--epsilon expects a number or 'none', got '" + text + "'");
  }
}

ExperimentConfig resolve(const Options& o, bool stochastic) {
  ExperimentConfig cfg = o.config.empty() ? ExperimentConfig{} : harness::load_config(o.config);
  if (o.seed) cfg.seed = o.seed;
  if (!o.out.empty()) cfg.output_dir = o.out;
  if (o.pool_size) cfg.pool_size = *o.pool_size;
  cfg.validate();
  if (stochastic && !cfg.seed) throw ConfigError("--seed is required (or a 'seed' entry in the config)");
  return cfg;
}

// Pool chosen by --epsilon/--alpha; defaults to the robust base pool.
harness::PoolSpec pool_spec(const Options& o, const ExperimentConfig& cfg) {
  harness::PoolSpec spec;
  spec.epsilon = o.epsilon.empty() ? cfg.adaptive_epsilon : parse_epsilon(o.epsilon);
  spec.alpha = o.alpha;
  return spec;
}

bool up_to_date(const fs::path& csv, const std::string& command, const ExperimentConfig& cfg) {
  const fs::path meta = csv.string() + ".meta.json";
  if (!fs::exists(csv) || !fs::exists(meta)) return false;
  try {
    std::ifstream in(meta);
    const auto j = nlohmann::json::parse(in);
    return j.at("command") == command && j.at("config_fingerprint") == hex64(cfg.fingerprint());
  } catch (const std::exception&) {
    return false;
  }
}

template <class F>
void write_atomic(const fs::path& path, F&& body) {
  fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw IoError("cannot write " + tmp.string());
    body(out);
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

struct Context {
  ExperimentConfig cfg;
  data::Task task;
  harness::PoolBuilder builder;
  harness::SetCache sets;

  explicit Context(ExperimentConfig c)
      : cfg(std::move(c)),
        task(data::make_task(cfg.task_spec())),
        builder(cfg, task, cfg.output_dir / "cache"),
        sets(cfg, task, cfg.output_dir / "cache" / "sets") {}
};

void report(const fs::path& path) { std::cout << "wrote " << path.string() << "\n"; }

void skip(const fs::path& path) { std::cout << "up to date: " << path.string() << "\n"; }

void write_ood(std::ostream& out, const data::Task& task) {
  out << "# semback-ood dim=" << task.spec.dim << " sources=" << task.ood.size() << "\n";
  out << "split,source";
  for (std::size_t j = 0; j < task.spec.dim; ++j) out << ",x" << j;
  out << "\n";
  for (const auto& pool : task.ood) {
    const std::pair<const char*, const data::Samples*> splits[] = {
        {"train", &pool.train}, {"val", &pool.val}, {"test", &pool.test}};
    for (const auto& [name, samples] : splits) {
      for (std::size_t i = 0; i < samples->size(); ++i) {
        out << name << ',' << pool.source;
        for (const double v : samples->row(i)) out << ',' << data::format_double(v);
        out << '\n';
      }
    }
  }
}

int cmd_make_task(const Options& o) {
  const auto cfg = resolve(o, true);
  const auto task = data::make_task(cfg.task_spec());
  const fs::path clean = cfg.output_dir / "task.csv";
  const fs::path ood = cfg.output_dir / "ood.csv";
  write_atomic(clean, [&](std::ostream& out) {
    const data::Dataset* parts[] = {&task.train, &task.val, &task.test};
    data::write_datasets(out, parts);
  });
  write_atomic(ood, [&](std::ostream& out) { write_ood(out, task); });
  harness::write_meta(clean, "make-task", cfg,
                      {{"task_fingerprint", hex64(task.spec.fingerprint())}, {"ood", ood.filename().string()}});
  report(clean);
  report(ood);
  return 0;
}

void persist_pool(const harness::BuiltPool& built, const ExperimentConfig& cfg) {
  const fs::path dir = cfg.output_dir / "pools" / built.pool.name;
  fs::create_directories(dir);
  for (const auto* m : built.pool.members()) nn::save_model(dir / (m->id + ".model"), *m->model);
  harness::write_manifest(dir / "manifest.json", built, cfg);
  write_atomic(dir / "metrics.csv", [&](std::ostream& out) { harness::write_pool_metrics_csv(out, built); });
  report(dir);
}

int cmd_build_pool(const Options& o) {
  Context ctx(resolve(o, true));
  const auto built = ctx.builder.build(pool_spec(o, ctx.cfg));
  persist_pool(built, ctx.cfg);
  std::cout << "trained " << ctx.builder.trained_count() << " models\n";
  return 0;
}

struct GenSetOptions {
  std::string kind = "Inverted";
  std::string model;
  std::string variant = "two-step";
  std::string output;
};

int cmd_gen_set(const Options& o, const GenSetOptions& g) {
  Context ctx(resolve(o, true));
  const auto kind = distances::parse_set_kind(g.kind);
  std::optional<nn::Model> model;
  if (!g.model.empty()) model = nn::load_model(g.model);
  if (distances::depends_on_model(kind) && !model) throw ConfigError("--model is required for " + g.kind);
  const auto variant = inversion::parse_variant(g.variant);
  distances::DistanceTestSet set;
  if (kind == distances::SetKind::Inverted) {
    set = *ctx.sets.ablation(variant, *model);
  } else {
    set = *ctx.sets.get(kind, model ? &*model : nullptr);
  }
  const fs::path path = g.output.empty() ? ctx.cfg.output_dir / "sets" / (g.kind + ".csv") : fs::path(g.output);
  write_atomic(path, [&](std::ostream& out) { distances::write_test_set(out, set); });
  report(path);
  return 0;
}

int cmd_run_grid(const Options& o) {
  const auto cfg = resolve(o, true);
  const auto spec = pool_spec(o, cfg);
  const fs::path path = cfg.output_dir / ("grid-" + spec.name() + ".csv");
  if (up_to_date(path, "run-grid " + spec.name(), cfg)) return skip(path), 0;
  Context ctx(cfg);
  const auto built = ctx.builder.build(spec);
  persist_pool(built, ctx.cfg);
  const auto rows = harness::run_grid(built, ctx.sets, ctx.cfg);
  write_atomic(path, [&](std::ostream& out) { harness::write_grid_csv(out, rows); });
  harness::write_meta(path, "run-grid " + spec.name(), ctx.cfg, {{"pool", built.pool.name}, {"rows", rows.size()}});
  report(path);
  return 0;
}

int cmd_adaptive_sweep(const Options& o) {
  const auto cfg = resolve(o, true);
  const fs::path grid = cfg.output_dir / "adaptive-sweep.csv";
  const fs::path matrix = cfg.output_dir / "adaptive-matrix.csv";
  if (up_to_date(grid, "adaptive-sweep", cfg) && up_to_date(matrix, "adaptive-sweep", cfg)) {
    skip(grid);
    skip(matrix);
    return 0;
  }
  Context ctx(cfg);
  const auto result = harness::run_adaptive_sweep(ctx.builder, ctx.sets, ctx.cfg);
  nlohmann::json pools = nlohmann::json::array();
  for (const auto& p : result.pools) {
    persist_pool(p, ctx.cfg);
    pools.push_back(p.pool.name);
  }
  write_atomic(grid, [&](std::ostream& out) { harness::write_grid_csv(out, result.rows); });
  write_atomic(matrix, [&](std::ostream& out) {
    harness::write_matrix_csv(out, result.matrix, ctx.cfg.fingerprint());
  });
  harness::write_meta(grid, "adaptive-sweep", ctx.cfg, {{"pools", pools}, {"rows", result.rows.size()}});
  harness::write_meta(matrix, "adaptive-sweep", ctx.cfg, {{"pools", pools}, {"cells", result.matrix.size()}});
  report(grid);
  report(matrix);
  return 0;
}

int cmd_ablation(const Options& o) {
  const auto cfg = resolve(o, true);
  const auto spec = pool_spec(o, cfg);
  const fs::path path = cfg.output_dir / ("ablation-" + spec.name() + ".csv");
  if (up_to_date(path, "ablation " + spec.name(), cfg)) return skip(path), 0;
  Context ctx(cfg);
  const auto built = ctx.builder.build(spec);
  persist_pool(built, ctx.cfg);
  const auto rows = harness::run_ablation(built, ctx.sets, ctx.cfg);
  write_atomic(path, [&](std::ostream& out) { harness::write_grid_csv(out, rows); });
  harness::write_meta(path, "ablation " + spec.name(), ctx.cfg, {{"pool", built.pool.name}, {"rows", rows.size()}});
  report(path);
  return 0;
}

int cmd_stats_table(std::size_t total, const std::string& output) {
  const auto rows = harness::stats_table(total);
  if (output.empty()) {
    harness::write_stats_csv(std::cout, rows);
  } else {
    write_atomic(output, [&](std::ostream& out) { harness::write_stats_csv(out, rows); });
    report(output);
  }
  return 0;
}

int cmd_pool_size_study(const Options& o) {
  const auto cfg = resolve(o, true);
  const fs::path path = cfg.output_dir / "pool-size.csv";
  if (up_to_date(path, "pool-size-study", cfg)) return skip(path), 0;
  Context ctx(cfg);
  const auto result = harness::run_pool_size_study(ctx.builder, ctx.sets, ctx.cfg);
  persist_pool(result.big, ctx.cfg);
  persist_pool(result.test, ctx.cfg);
  write_atomic(path, [&](std::ostream& out) {
    harness::write_pool_size_csv(out, result.rows, ctx.cfg.fingerprint());
  });
  harness::write_meta(path, "pool-size-study", ctx.cfg,
                      {{"big_pool", result.big.pool.name}, {"test_pool", result.test.pool.name}});
  report(path);
  return 0;
}

void add_common(CLI::App* sub, Options& o, bool pool_flags) {
  sub->add_option("--config", o.config, "JSON config file")->check(CLI::ExistingFile);
  sub->add_option("--seed", o.seed, "master seed");
  sub->add_option("--out", o.out, "output directory (overrides the config)");
  sub->add_option("--pool-size", o.pool_size, "clean and poisoned models per pool");
  if (pool_flags) {
    sub->add_option("--epsilon", o.epsilon, "adversarial training radius or 'none'");
    sub->add_option("--alpha", o.alpha, "adaptive attack coefficient");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"semback: semantic backdoor detection experiments"};
  app.require_subcommand(1);
  Options o;
  GenSetOptions g;
  std::size_t total = 0;
  std::string stats_output;

  auto* make_task = app.add_subcommand("make-task", "generate and write the synthetic task");
  add_common(make_task, o, false);
  auto* build_pool = app.add_subcommand("build-pool", "train (or reload) a model pool");
  add_common(build_pool, o, true);
  auto* gen_set = app.add_subcommand("gen-set", "build one distance test set");
  add_common(gen_set, o, false);
  gen_set->add_option("--kind", g.kind, "Training, Test, Adversarial, Inverted or Random");
  gen_set->add_option("--model", g.model, "model file of interest")->check(CLI::ExistingFile);
  gen_set->add_option("--variant", g.variant, "inversion variant");
  gen_set->add_option("--output", g.output, "output CSV");
  auto* run_grid = app.add_subcommand("run-grid", "leave-one-out grid over sets, distances and aggregations");
  add_common(run_grid, o, true);
  auto* sweep = app.add_subcommand("adaptive-sweep", "adaptive pools, ASR floors and the cross-attack matrix");
  add_common(sweep, o, false);
  auto* ablation = app.add_subcommand("ablation", "inversion variant ablation");
  add_common(ablation, o, true);
  auto* stats = app.add_subcommand("stats-table", "binomial significance table");
  stats->add_option("n", total, "number of evaluated models")->required();
  stats->add_option("--output", stats_output, "output CSV (default stdout)");
  auto* size_study = app.add_subcommand("pool-size-study", "detection quality against pool size");
  add_common(size_study, o, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*make_task) return cmd_make_task(o);
    if (*build_pool) return cmd_build_pool(o);
    if (*gen_set) return cmd_gen_set(o, g);
    if (*run_grid) return cmd_run_grid(o);
    if (*sweep) return cmd_adaptive_sweep(o);
    if (*ablation) return cmd_ablation(o);
    if (*stats) return cmd_stats_table(total, stats_output);
    if (*size_study) return cmd_pool_size_study(o);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
