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

#include "semback/harness/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include "semback/error.hpp"
#include "semback/seed.hpp"

namespace semback::harness {

namespace {

std::uint64_t mix(std::uint64_t h, std::uint64_t v) { return splitmix64(h ^ splitmix64(v)); }
std::uint64_t mix(std::uint64_t h, const std::string& s) { return fnv1a(s, splitmix64(h)); }

std::string optional_text(const std::optional<double>& v) { return v ? data::format_double(*v) : std::string(); }

}  // namespace

std::string fixed(double value, int decimals) {
  if (!std::isfinite(value)) return "nan";
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(decimals);
  // Avoid printing "-0.00".
  const double scale = std::pow(10.0, decimals);
  if (std::round(value * scale) == 0.0) value = 0.0;
  s << value;
  return s.str();
}

SetCache::SetCache(const ExperimentConfig& cfg, const data::Task& task, std::optional<std::filesystem::path> dir)
    : cfg_(cfg), task_(task), dir_(std::move(dir)) {
  if (dir_) std::filesystem::create_directories(*dir_);
}

std::shared_ptr<const distances::DistanceTestSet> SetCache::fetch(
    std::uint64_t key, const std::string& label, const std::function<distances::DistanceTestSet()>& build) {
  {
    std::lock_guard lock(mutex_);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
  }
  std::shared_ptr<const distances::DistanceTestSet> set;
  std::optional<std::filesystem::path> file;
  if (dir_) file = *dir_ / (label + "-" + hex64(key) + ".csv");
  if (file && std::filesystem::exists(*file)) {
    std::ifstream in(*file);
    set = std::make_shared<const distances::DistanceTestSet>(distances::read_test_set(in));
  } else {
    set = std::make_shared<const distances::DistanceTestSet>(build());
    if (file) {
      const auto tmp = file->string() + ".tmp";
      {
        std::ofstream out(tmp);
        if (!out) throw IoError("cannot write " + tmp);
        distances::write_test_set(out, *set);
      }
      std::filesystem::rename(tmp, *file);
    }
  }
  std::lock_guard lock(mutex_);
  return memo_.emplace(key, set).first->second;
}

std::shared_ptr<const distances::DistanceTestSet> SetCache::get(distances::SetKind kind, const nn::Model* model) {
  if (distances::depends_on_model(kind) && model == nullptr)
    throw ConfigError(std::string("test set ") + distances::name(kind) + " needs a model of interest");
  const std::uint64_t model_fp = distances::depends_on_model(kind) ? model->fingerprint() : 0;
  const auto tcfg = cfg_.test_set_config(model_fp);
  std::uint64_t key = mix(task_.spec.fingerprint(), distances::name(kind));
  key = mix(key, model_fp);
  switch (kind) {
    case distances::SetKind::Adversarial: {
      const auto& a = tcfg.adversarial;
      key = mix(key, data::format_double(a.step_size) + "/" + std::to_string(a.steps) + "/" +
                         optional_text(a.epsilon) + "/" + std::to_string(a.clip_to_domain));
      break;
    }
    case distances::SetKind::Inverted:
      key = mix(mix(key, to_json(cfg_)["inversion"].dump()), tcfg.inversion.seed);
      break;
    case distances::SetKind::Random:
      key = mix(key, tcfg.random_seed);
      break;
    default:
      break;
  }
  return fetch(key, distances::name(kind), [&] {
    return distances::build_distance_test_set(kind, task_, model, tcfg);
  });
}

std::shared_ptr<const distances::DistanceTestSet> SetCache::ablation(inversion::Variant variant,
                                                                      const nn::Model& model) {
  if (variant == inversion::Variant::TwoStep) return get(distances::SetKind::Inverted, &model);
  const auto tcfg = cfg_.test_set_config(model.fingerprint());
  std::uint64_t key = mix(task_.spec.fingerprint(), std::string("ablation/") + inversion::variant_name(variant));
  key = mix(mix(mix(key, model.fingerprint()), to_json(cfg_)["inversion"].dump()), tcfg.inversion.seed);
  return fetch(key, std::string("Inverted-") + inversion::variant_name(variant), [&] {
    return inversion::generate_inverted_ablation(model, task_.train, tcfg.inversion, variant);
  });
}

std::size_t Roster::add(const detector::PoolMember& member, const std::string& pool) {
  const std::size_t existing = find(member.model.get());
  if (existing != members.size()) return existing;
  members.push_back(&member);
  labels.push_back(pool + "/" + member.id);
  return members.size() - 1;
}

std::size_t Roster::find(const nn::Model* model) const {
  for (std::size_t i = 0; i < members.size(); ++i)
    if (members[i]->model.get() == model) return i;
  return members.size();
}

std::vector<detector::PoolDistances> roster_distances(const Roster& roster, distances::SetKind kind,
                                                      SetCache& sets,
                                                      std::span<const distances::SampleDistance> dkinds,
                                                      std::span<const distances::Aggregation> akinds,
                                                      std::optional<inversion::Variant> variant) {
  std::vector<std::shared_ptr<const distances::DistanceTestSet>> keep;
  detector::PoolView view;
  for (const auto* m : roster.members) {
    auto s = variant ? sets.ablation(*variant, *m->model) : sets.get(kind, m->model.get());
    view.models.push_back(m->model.get());
    view.poisoned.push_back(m->poisoned());
    view.sets.push_back(s.get());
    keep.push_back(std::move(s));
  }
  return detector::pool_distance_grid(view, dkinds, akinds);
}

namespace {

std::uint64_t row_fingerprint(const ExperimentConfig& cfg, const GridRow& r) {
  std::uint64_t h = mix(cfg.fingerprint(), r.pool);
  h = mix(h, r.set + "/" + distances::name(r.distance) + "/" + distances::name(r.aggregation) + "/" +
                 data::format_double(r.asr_floor) + "/" + optional_text(r.alpha));
  return h;
}

// Grid rows of one pool given distances over its roster rows.
void append_rows(std::vector<GridRow>& out, const GridRow& base, const ExperimentConfig& cfg,
                 const std::vector<detector::PoolDistances>& grid, std::span<const std::size_t> rows) {
  const std::size_t na = cfg.aggregations.size();
  for (std::size_t d = 0; d < cfg.distances.size(); ++d) {
    for (std::size_t a = 0; a < na; ++a) {
      GridRow row = base;
      row.distance = cfg.distances[d];
      row.aggregation = cfg.aggregations[a];
      if (row.well_defined) {
        const auto sub = detector::restrict_rows(grid[d * na + a], rows);
        row.report = detector::loo_evaluate(sub);
      }
      row.fingerprint = row_fingerprint(cfg, row);
      out.push_back(std::move(row));
    }
  }
}

std::vector<std::size_t> all_rows(const Roster& roster) {
  std::vector<std::size_t> rows(roster.members.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  return rows;
}

}  // namespace

std::vector<GridRow> run_grid(const BuiltPool& pool, SetCache& sets, const ExperimentConfig& cfg) {
  Roster roster;
  for (const auto* m : pool.pool.members()) roster.add(*m, pool.pool.name);
  const auto rows = all_rows(roster);
  std::vector<GridRow> out;
  for (const auto kind : cfg.set_kinds) {
    const auto grid = roster_distances(roster, kind, sets, cfg.distances, cfg.aggregations);
    GridRow base;
    base.pool = pool.pool.name;
    base.alpha = pool.spec.alpha;
    base.set = distances::name(kind);
    base.clean = pool.pool.clean.size();
    base.poisoned = pool.pool.poisoned.size();
    append_rows(out, base, cfg, grid, rows);
  }
  return out;
}

double best_j(const std::vector<GridRow>& rows, std::optional<std::string> set,
              std::optional<distances::SampleDistance> distance, std::optional<distances::Aggregation> aggregation) {
  double best = -2.0;
  for (const auto& r : rows) {
    if (!r.well_defined) continue;
    if (set && r.set != *set) continue;
    if (distance && r.distance != *distance) continue;
    if (aggregation && r.aggregation != *aggregation) continue;
    best = std::max(best, r.report.j());
  }
  if (best < -1.5) throw ConfigError("best_j: no matching well-defined grid row");
  return best;
}

const GridRow& find_row(const std::vector<GridRow>& rows, const std::string& set, distances::SampleDistance d,
                        distances::Aggregation a) {
  for (const auto& r : rows)
    if (r.set == set && r.distance == d && r.aggregation == a) return r;
  throw ConfigError("grid has no row for " + set + "/" + distances::name(d) + "/" + distances::name(a));
}

SweepResult run_adaptive_sweep(PoolBuilder& builder, SetCache& sets, const ExperimentConfig& cfg) {
  SweepResult result;
  PoolSpec base;
  base.epsilon = cfg.adaptive_epsilon;
  result.pools.push_back(builder.build(base));
  for (const double alpha : cfg.alphas) {
    PoolSpec s = base;
    s.alpha = alpha;
    result.pools.push_back(builder.build(s));
  }

  Roster roster;
  std::vector<std::vector<std::size_t>> poisoned_rows(result.pools.size());
  std::vector<std::size_t> clean_rows;
  for (const auto& m : result.pools.front().pool.clean) clean_rows.push_back(roster.add(m, result.pools.front().pool.name));
  for (std::size_t p = 0; p < result.pools.size(); ++p) {
    const auto& pool = result.pools[p].pool;
    for (const auto& m : pool.clean)
      if (roster.find(m.model.get()) == roster.members.size())
        throw PoolError("adaptive pool " + pool.name + " does not share the base pool's clean models");
    for (const auto& m : pool.poisoned) poisoned_rows[p].push_back(roster.add(m, pool.name));
  }
  auto attack_label = [&](std::size_t p) {
    return result.pools[p].spec.alpha ? "a" + data::format_double(*result.pools[p].spec.alpha) : std::string("N");
  };
  auto filtered = [&](std::size_t p, double floor) {
    std::vector<std::size_t> rows = clean_rows;
    for (const auto r : poisoned_rows[p])
      if (roster.members[r]->asr >= floor) rows.push_back(r);
    return rows;
  };

  for (const auto kind : cfg.set_kinds) {
    const auto grid = roster_distances(roster, kind, sets, cfg.distances, cfg.aggregations);
    for (std::size_t p = 0; p < result.pools.size(); ++p) {
      for (const double floor : cfg.asr_floors) {
        const auto rows = filtered(p, floor);
        GridRow base_row;
        base_row.pool = result.pools[p].pool.name;
        base_row.alpha = result.pools[p].spec.alpha;
        base_row.asr_floor = floor;
        base_row.set = distances::name(kind);
        base_row.clean = clean_rows.size();
        base_row.poisoned = rows.size() - clean_rows.size();
        base_row.well_defined = base_row.poisoned >= 2;
        append_rows(result.rows, base_row, cfg, grid, rows);
      }
    }
  }

  const distances::SampleDistance md[] = {cfg.matrix_distance};
  const distances::Aggregation ma[] = {cfg.matrix_aggregation};
  const auto mgrid = roster_distances(roster, cfg.matrix_set, sets, md, ma);
  for (const double floor : cfg.asr_floors) {
    for (std::size_t a = 0; a < result.pools.size(); ++a) {
      const auto authority = filtered(a, floor);
      for (std::size_t p = 0; p < result.pools.size(); ++p) {
        const auto provider = filtered(p, floor);
        MatrixCell cell;
        cell.asr_floor = floor;
        cell.authority = attack_label(a);
        cell.provider = attack_label(p);
        cell.well_defined = authority.size() - clean_rows.size() >= 2 && provider.size() > clean_rows.size();
        if (cell.well_defined) cell.confusion = detector::cross_evaluate(mgrid.front(), authority, provider);
        result.matrix.push_back(cell);
      }
    }
  }
  return result;
}

std::vector<GridRow> run_ablation(const BuiltPool& pool, SetCache& sets, const ExperimentConfig& cfg) {
  Roster roster;
  for (const auto* m : pool.pool.members()) roster.add(*m, pool.pool.name);
  const auto rows = all_rows(roster);
  std::vector<GridRow> out;
  for (const auto v : {inversion::Variant::TwoStep, inversion::Variant::WithoutPrior, inversion::Variant::SingleStep,
                       inversion::Variant::InvertOnly}) {
    const auto grid = roster_distances(roster, distances::SetKind::Inverted, sets, cfg.distances, cfg.aggregations, v);
    GridRow base;
    base.pool = pool.pool.name;
    base.alpha = pool.spec.alpha;
    base.set = std::string("Inverted/") + inversion::variant_name(v);
    base.clean = pool.pool.clean.size();
    base.poisoned = pool.pool.poisoned.size();
    append_rows(out, base, cfg, grid, rows);
  }
  return out;
}

std::vector<StatsRow> stats_table(std::size_t total) {
  if (total < 1) throw ConfigError("stats-table needs n >= 1");
  std::vector<StatsRow> rows;
  for (std::size_t c = (total + 1) / 2; c <= total; ++c) rows.push_back({c, detector::binomial_p(c, total)});
  return rows;
}

PoolSizeResult run_pool_size_study(PoolBuilder& builder, SetCache& sets, const ExperimentConfig& cfg) {
  PoolSpec big{cfg.study_epsilon, std::nullopt, cfg.big_pool_size, "size-big"};
  PoolSpec test{cfg.study_epsilon, std::nullopt, cfg.test_pool_size, "size-test"};
  PoolSizeResult result{builder.build(big), builder.build(test), {}};
  Roster roster;
  std::vector<std::size_t> big_rows, test_rows;
  for (const auto* m : result.big.pool.members()) big_rows.push_back(roster.add(*m, result.big.pool.name));
  for (const auto* m : result.test.pool.members()) test_rows.push_back(roster.add(*m, result.test.pool.name));
  const distances::SampleDistance md[] = {cfg.matrix_distance};
  const distances::Aggregation ma[] = {cfg.matrix_aggregation};
  const auto grid = roster_distances(roster, cfg.matrix_set, sets, md, ma);
  result.rows = detector::pool_size_study(grid.front(), big_rows, test_rows, cfg.m_values, cfg.resamples,
                                          derive_seed(cfg.master_seed(), "pool-size-study"));
  return result;
}

void write_grid_csv(std::ostream& out, const std::vector<GridRow>& rows) {
  out << "pool,alpha,asr_floor,set,distance,aggregation,clean,poisoned,well_defined,j,tpr,tnr,fpr,fnr,"
         "correct,p_value,ci_infimum,threshold,fingerprint\n";
  for (const auto& r : rows) {
    out << r.pool << ',' << optional_text(r.alpha) << ',' << data::format_double(r.asr_floor) << ',' << r.set << ','
        << distances::name(r.distance) << ',' << distances::name(r.aggregation) << ',' << r.clean << ','
        << r.poisoned << ',' << (r.well_defined ? 1 : 0);
    if (r.well_defined) {
      const auto& c = r.report.confusion;
      out << ',' << fixed(c.j(), 4) << ',' << fixed(c.tpr(), 4) << ',' << fixed(c.tnr(), 4) << ','
          << fixed(c.fpr(), 4) << ',' << fixed(c.fnr(), 4) << ',' << c.correct() << ','
          << fixed(r.report.significance.p_value, 9) << ',' << fixed(r.report.significance.ci_infimum, 2) << ','
          << data::format_double(r.report.full.threshold);
    } else {
      out << ",,,,,,,,,";
    }
    out << ',' << hex64(r.fingerprint) << '\n';
  }
}

void write_matrix_csv(std::ostream& out, const std::vector<MatrixCell>& cells, std::uint64_t config_fingerprint) {
  out << "asr_floor,authority,provider,well_defined,j,tpr,tnr,fingerprint\n";
  for (const auto& c : cells) {
    const std::uint64_t fp = mix(config_fingerprint, data::format_double(c.asr_floor) + "/" + c.authority + "/" + c.provider);
    out << data::format_double(c.asr_floor) << ',' << c.authority << ',' << c.provider << ','
        << (c.well_defined ? 1 : 0) << ',';
    if (c.well_defined)
      out << fixed(c.confusion.j(), 4) << ',' << fixed(c.confusion.tpr(), 4) << ',' << fixed(c.confusion.tnr(), 4);
    else
      out << ",,";
    out << ',' << hex64(fp) << '\n';
  }
}

void write_stats_csv(std::ostream& out, const std::vector<StatsRow>& rows) {
  out << "correct,j,p_value,ci_infimum\n";
  for (const auto& r : rows)
    out << r.correct << ',' << fixed(r.significance.j, 2) << ',' << fixed(r.significance.p_value, 9) << ','
        << fixed(r.significance.ci_infimum, 2) << '\n';
}

void write_pool_size_csv(std::ostream& out, const std::vector<detector::PoolSizeRow>& rows,
                         std::uint64_t config_fingerprint) {
  out << "m,resamples,mean_j,min_j,max_j,fingerprint\n";
  for (const auto& r : rows)
    out << r.m << ',' << r.resamples << ',' << fixed(r.mean_j, 4) << ',' << fixed(r.min_j, 4) << ','
        << fixed(r.max_j, 4) << ',' << hex64(mix(config_fingerprint, r.m)) << '\n';
}

void write_distance_csv(std::ostream& out, const Roster& roster, const std::string& set,
                        std::span<const distances::SampleDistance> dkinds,
                        std::span<const distances::Aggregation> akinds,
                        const std::vector<detector::PoolDistances>& grid) {
  out << "model_a,model_b,set,distance,aggregation,value\n";
  for (std::size_t d = 0; d < dkinds.size(); ++d) {
    for (std::size_t a = 0; a < akinds.size(); ++a) {
      const auto& p = grid[d * akinds.size() + a];
      for (std::size_t r = 0; r < p.rows; ++r)
        for (std::size_t c = 0; c < p.columns; ++c)
          out << roster.labels[p.column_row[c]] << ',' << roster.labels[r] << ',' << set << ','
              << distances::name(dkinds[d]) << ',' << distances::name(akinds[a]) << ','
              << data::format_double(p.at(r, c)) << '\n';
    }
  }
}

void write_pool_metrics_csv(std::ostream& out, const BuiltPool& pool) {
  out << "pool,id,role,seed,epsilon,alpha,target,source,accuracy,asr,robust_accuracy,twin_accuracy,model_fingerprint\n";
  for (const auto* m : pool.pool.members()) {
    out << pool.pool.name << ',' << m->id << ',' << detector::role_name(m->role) << ',' << m->seed << ','
        << optional_text(m->epsilon) << ',' << optional_text(m->alpha) << ',';
    if (m->backdoor) out << m->backdoor->target << ',' << m->backdoor->source;
    else out << ',';
    out << ',' << fixed(m->accuracy, 4) << ',' << fixed(m->asr, 4) << ',' << fixed(m->robust_accuracy, 4) << ',';
    if (m->backdoor) out << fixed(pool.twin_accuracy[m->index], 4);
    out << ',' << hex64(m->model->fingerprint()) << '\n';
  }
}

void write_meta(const std::filesystem::path& csv, const std::string& command, const ExperimentConfig& cfg,
                const nlohmann::json& artifacts) {
  nlohmann::json meta = {
      {"command", command},
      {"config", to_json(cfg)},
      {"config_fingerprint", hex64(cfg.fingerprint())},
      {"artifacts", artifacts},
      {"conventions",
       {{"labels", "0-based class ids"},
        {"ce_kl_order", "f1 = pool (clean reference) model, f2 = model under test"},
        {"positive_class", "poisoned"},
        {"decision", "score <= threshold is clean"}}}};
  std::ofstream out(csv.string() + ".meta.json");
  if (!out) throw IoError("cannot write metadata for " + csv.string());
  out << meta.dump(2) << "\n";
}

}  // namespace semback::harness
