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

#include "semback/detector/detection.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <random>

#include "semback/error.hpp"
#include "semback/parallel.hpp"

namespace semback::detector {

double median(std::span<const double> values) {
  if (values.empty()) throw PoolError("median of an empty list");
  return distances::aggregate(values, distances::Aggregation::Med);
}

double score(const nn::Model& theta, std::span<const nn::Model* const> clean_pool,
             const distances::DistanceTestSet& set, distances::SampleDistance dkind,
             distances::Aggregation akind) {
  std::vector<double> d;
  for (const nn::Model* m : clean_pool) {
    if (m == &theta) continue;
    d.push_back(distances::model_distance(*m, theta, set.inputs, dkind, akind));
  }
  if (d.empty()) throw PoolError("score: the clean pool has no model other than the one under test");
  return median(d);
}

std::vector<PoolDistances> pool_distance_grid(const PoolView& view,
                                              std::span<const distances::SampleDistance> dkinds,
                                              std::span<const distances::Aggregation> akinds) {
  const std::size_t rows = view.models.size();
  if (view.poisoned.size() != rows || view.sets.size() != rows)
    throw ConfigError("pool view: models, flags and sets differ in length");
  PoolDistances shape;
  shape.rows = rows;
  shape.poisoned = view.poisoned;
  for (std::size_t r = 0; r < rows; ++r)
    if (!view.poisoned[r]) shape.column_row.push_back(r);
  shape.columns = shape.column_row.size();
  shape.values.assign(rows * shape.columns, 0.0);
  std::vector<PoolDistances> grid(dkinds.size() * akinds.size(), shape);

  // Evaluate every model once per distinct set.
  std::vector<const distances::DistanceTestSet*> distinct;
  std::map<const distances::DistanceTestSet*, std::size_t> set_index;
  for (const auto* s : view.sets) {
    if (s == nullptr) throw ConfigError("pool view: missing test set");
    if (set_index.emplace(s, distinct.size()).second) distinct.push_back(s);
  }
  // evals[set][row], only rows that are needed on that set.
  std::vector<std::vector<distances::Evaluation>> evals(distinct.size(), std::vector<distances::Evaluation>(rows));
  std::vector<std::pair<std::size_t, std::size_t>> jobs;
  {
    std::vector<std::vector<std::uint8_t>> needed(distinct.size(), std::vector<std::uint8_t>(rows, 0));
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t s = set_index.at(view.sets[r]);
      needed[s][r] = 1;
      for (const std::size_t c : shape.column_row) needed[s][c] = 1;
    }
    for (std::size_t s = 0; s < distinct.size(); ++s)
      for (std::size_t r = 0; r < rows; ++r)
        if (needed[s][r]) jobs.emplace_back(s, r);
  }
  parallel_for(jobs.size(), [&](std::size_t j) {
    const auto [s, r] = jobs[j];
    evals[s][r] = distances::evaluate(*view.models[r], distinct[s]->inputs);
  });

  parallel_for(rows, [&](std::size_t r) {
    const std::size_t s = set_index.at(view.sets[r]);
    for (std::size_t c = 0; c < shape.columns; ++c) {
      const std::size_t cr = shape.column_row[c];
      for (std::size_t d = 0; d < dkinds.size(); ++d) {
        const auto samples = distances::sample_distances(dkinds[d], evals[s][cr], evals[s][r]);
        for (std::size_t a = 0; a < akinds.size(); ++a)
          grid[d * akinds.size() + a].values[r * shape.columns + c] = distances::aggregate(samples, akinds[a]);
      }
    }
  });
  return grid;
}

PoolDistances restrict_rows(const PoolDistances& p, std::span<const std::size_t> rows) {
  std::vector<std::size_t> column_of(p.rows, p.columns);
  for (std::size_t c = 0; c < p.columns; ++c) column_of[p.column_row[c]] = c;
  PoolDistances out;
  out.rows = rows.size();
  std::vector<std::size_t> source_columns;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::size_t r = rows[i];
    if (r >= p.rows) throw ConfigError("restrict_rows: row out of range");
    out.poisoned.push_back(p.poisoned[r]);
    if (!p.poisoned[r]) {
      if (column_of[r] == p.columns) throw ConfigError("restrict_rows: clean row without a column");
      out.column_row.push_back(i);
      source_columns.push_back(column_of[r]);
    }
  }
  out.columns = source_columns.size();
  out.values.resize(out.rows * out.columns);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t c = 0; c < out.columns; ++c) out.values[i * out.columns + c] = p.at(rows[i], source_columns[c]);
  return out;
}

namespace {

// Median of row r against the columns whose rows are not excluded.
double row_score(const PoolDistances& p, std::size_t r, std::size_t excluded_a, std::size_t excluded_b,
                 std::vector<double>& scratch) {
  scratch.clear();
  for (std::size_t c = 0; c < p.columns; ++c) {
    const std::size_t cr = p.column_row[c];
    if (cr == excluded_a || cr == excluded_b) continue;
    scratch.push_back(p.at(r, c));
  }
  if (scratch.empty())
    throw PoolError("score of model " + std::to_string(r) + ": no clean reference model left");
  return median(scratch);
}

}  // namespace

DetectionReport loo_evaluate(const PoolDistances& p) {
  std::size_t clean_rows = 0;
  for (const auto f : p.poisoned) clean_rows += f == 0;
  if (clean_rows < 2 || p.rows - clean_rows < 2)
    throw PoolError("leave-one-out evaluation needs at least two clean and two poisoned models");
  const std::size_t none = p.rows;

  DetectionReport rep;
  rep.poisoned = p.poisoned;
  rep.scores.resize(p.rows);
  rep.fold_thresholds.resize(p.rows);
  rep.flagged.resize(p.rows);
  std::vector<double> scratch;
  for (std::size_t r = 0; r < p.rows; ++r) rep.scores[r] = row_score(p, r, r, none, scratch);

  std::vector<double> clean, poisoned;
  for (std::size_t held = 0; held < p.rows; ++held) {
    clean.clear();
    poisoned.clear();
    for (std::size_t r = 0; r < p.rows; ++r) {
      if (r == held) continue;
      (p.poisoned[r] ? poisoned : clean).push_back(row_score(p, r, r, held, scratch));
    }
    const Calibration cal = calibrate_threshold(clean, poisoned);
    rep.fold_thresholds[held] = cal.threshold;
    const bool flag = is_flagged(rep.scores[held], cal.threshold);
    rep.flagged[held] = flag;
    if (p.poisoned[held]) (flag ? rep.confusion.true_positive : rep.confusion.false_negative)++;
    else (flag ? rep.confusion.false_positive : rep.confusion.true_negative)++;
  }

  clean.clear();
  poisoned.clear();
  for (std::size_t r = 0; r < p.rows; ++r) (p.poisoned[r] ? poisoned : clean).push_back(rep.scores[r]);
  rep.full = calibrate_threshold(clean, poisoned);
  rep.significance = binomial_p(rep.confusion.correct(), p.rows);
  return rep;
}

Confusion cross_evaluate(const PoolDistances& p, std::span<const std::size_t> authority_rows,
                         std::span<const std::size_t> provider_rows) {
  const std::size_t none = p.rows;
  for (const auto r : authority_rows)
    if (r >= p.rows) throw ConfigError("cross evaluation: authority row out of range");
  std::vector<double> scratch, clean, poisoned;
  Confusion out;
  for (const auto held : provider_rows) {
    if (held >= p.rows) throw ConfigError("cross evaluation: provider row out of range");
    clean.clear();
    poisoned.clear();
    for (const auto r : authority_rows) {
      if (r == held) continue;
      (p.poisoned[r] ? poisoned : clean).push_back(row_score(p, r, r, held, scratch));
    }
    const Calibration cal = calibrate_threshold(clean, poisoned);
    const bool flag = is_flagged(row_score(p, held, held, none, scratch), cal.threshold);
    if (p.poisoned[held]) (flag ? out.true_positive : out.false_negative)++;
    else (flag ? out.false_positive : out.true_negative)++;
  }
  return out;
}

std::vector<PoolSizeRow> pool_size_study(const PoolDistances& p, std::span<const std::size_t> big_rows,
                                         std::span<const std::size_t> test_rows,
                                         std::span<const std::size_t> m_values, std::size_t resamples,
                                         std::uint64_t seed) {
  if (resamples == 0) throw ConfigError("pool-size study: resample count must be positive");
  std::vector<std::size_t> column_of(p.rows, p.columns);
  for (std::size_t c = 0; c < p.columns; ++c) column_of[p.column_row[c]] = c;

  std::vector<std::size_t> big_clean, big_poisoned;
  for (const auto r : big_rows) {
    if (r >= p.rows) throw ConfigError("pool-size study: row out of range");
    if (p.poisoned[r]) big_poisoned.push_back(r);
    else if (column_of[r] == p.columns) throw ConfigError("pool-size study: big clean model is not a column");
    else big_clean.push_back(column_of[r]);
  }
  std::vector<std::size_t> test_clean, test_poisoned;
  for (const auto r : test_rows) {
    if (r >= p.rows) throw ConfigError("pool-size study: row out of range");
    if (std::find(big_rows.begin(), big_rows.end(), r) != big_rows.end())
      throw ConfigError("pool-size study: test pool overlaps the big pool");
    (p.poisoned[r] ? test_poisoned : test_clean).push_back(r);
  }
  if (test_clean.empty() || test_poisoned.empty())
    throw PoolError("pool-size study: the test pool needs clean and poisoned models");

  std::vector<PoolSizeRow> out;
  std::mt19937_64 rng(seed);
  std::vector<double> scratch, clean_scores, poisoned_scores, test_c, test_p;
  for (const std::size_t m : m_values) {
    if (m < 2 || m > big_clean.size() || m > big_poisoned.size())
      throw PoolError("pool-size study: m = " + std::to_string(m) + " needs between 2 and " +
                      std::to_string(std::min(big_clean.size(), big_poisoned.size())) + " models per class");
    PoolSizeRow row;
    row.m = m;
    row.resamples = resamples;
    row.min_j = 1.0;
    row.max_j = -1.0;
    double sum = 0.0;
    std::vector<std::size_t> cols = big_clean, pois = big_poisoned;
    for (std::size_t s = 0; s < resamples; ++s) {
      std::shuffle(cols.begin(), cols.end(), rng);
      std::shuffle(pois.begin(), pois.end(), rng);
      auto against = [&](std::size_t r, std::size_t skip_column) {
        scratch.clear();
        for (std::size_t i = 0; i < m; ++i)
          if (cols[i] != skip_column) scratch.push_back(p.at(r, cols[i]));
        return median(scratch);
      };
      clean_scores.clear();
      poisoned_scores.clear();
      for (std::size_t i = 0; i < m; ++i) clean_scores.push_back(against(p.column_row[cols[i]], cols[i]));
      for (std::size_t i = 0; i < m; ++i) poisoned_scores.push_back(against(pois[i], p.columns));
      const Calibration cal = calibrate_threshold(clean_scores, poisoned_scores);
      test_c.clear();
      test_p.clear();
      for (const auto r : test_clean) test_c.push_back(against(r, p.columns));
      for (const auto r : test_poisoned) test_p.push_back(against(r, p.columns));
      const double j = confusion(test_c, test_p, cal.threshold).j();
      sum += j;
      row.min_j = std::min(row.min_j, j);
      row.max_j = std::max(row.max_j, j);
    }
    row.mean_j = sum / static_cast<double>(resamples);
    out.push_back(row);
  }
  return out;
}

}  // namespace semback::detector
