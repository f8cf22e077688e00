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

#include "semback/attacks/pgd.hpp"

#include <algorithm>
#include <cmath>

#include "semback/error.hpp"

namespace semback::attacks {

void PgdConfig::validate() const {
  if (!(step_size > 0.0)) throw ConfigError("pgd: step size must be positive");
  if (steps < 1) throw ConfigError("pgd: step count must be at least 1");
  if (epsilon && *epsilon < 0.0) throw ConfigError("pgd: epsilon must be non-negative");
}

PgdConfig clipped_pgd(double epsilon, double step_size, int steps) {
  PgdConfig cfg;
  cfg.epsilon = epsilon;
  cfg.step_size = step_size;
  cfg.steps = steps;
  return cfg;
}

PgdConfig unclipped_pgd(double step_size, int steps) {
  PgdConfig cfg;
  cfg.step_size = step_size;
  cfg.steps = steps;
  return cfg;
}

PgdConfig adversarial_set_pgd() { return unclipped_pgd(0.01, 10); }

PgdConfig robust_eval_pgd(double epsilon) { return clipped_pgd(epsilon, epsilon / 8.0, 20); }

void pgd_inplace(const nn::Model& model, std::span<double> x, std::size_t label,
                 const PgdConfig& cfg, PgdWorkspace& ws) {
  const std::size_t d = x.size();
  ws.origin.assign(x.begin(), x.end());
  ws.grad.resize(d);
  ws.dz.resize(model.output_dim());
  const double radius = cfg.epsilon ? *cfg.epsilon : cfg.step_size * cfg.steps;
  for (int step = 0; step < cfg.steps; ++step) {
    nn::forward(model, x, ws.trace);
    nn::softmax(ws.trace.output(), ws.dz);
    ws.dz[label] -= 1.0;
    nn::backward(model, ws.trace, ws.dz, {}, {}, ws.grad, ws.back);
    for (std::size_t j = 0; j < d; ++j) {
      const double g = ws.grad[j];
      const double sign = g > 0.0 ? 1.0 : (g < 0.0 ? -1.0 : 0.0);
      double v = x[j] + cfg.step_size * sign;
      if (cfg.epsilon) v = std::clamp(v, ws.origin[j] - *cfg.epsilon, ws.origin[j] + *cfg.epsilon);
      if (cfg.clip_to_domain) v = std::clamp(v, 0.0, 1.0);
      // Rounding in the clamp can overshoot the radius by an ulp.
      while (std::abs(v - ws.origin[j]) > radius) v = std::nextafter(v, ws.origin[j]);
      x[j] = v;
    }
  }
}

std::vector<double> pgd(const nn::Model& model, std::span<const double> x, std::size_t label,
                        const PgdConfig& cfg) {
  cfg.validate();
  nn::check_input(model, x);
  nn::check_label(model, label);
  std::vector<double> out(x.begin(), x.end());
  PgdWorkspace ws;
  pgd_inplace(model, out, label, cfg, ws);
  return out;
}

bool is_adversarial(const nn::Model& model, std::span<const double> x,
                    std::span<const double> x_adv, std::size_t label) {
  return nn::predict(model, x) == label && nn::predict(model, x_adv) != label;
}

double robust_accuracy(const nn::Model& model, const data::Dataset& dataset, const PgdConfig& cfg) {
  cfg.validate();
  if (dataset.empty()) return 0.0;
  PgdWorkspace ws;
  nn::Trace trace;
  std::vector<double> x(dataset.dim());
  std::size_t correct = 0;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto row = dataset.input(i);
    std::copy(row.begin(), row.end(), x.begin());
    pgd_inplace(model, x, dataset.labels[i], cfg, ws);
    nn::forward(model, x, trace);
    correct += nn::argmax(trace.output()) == dataset.labels[i];
  }
  return static_cast<double>(correct) / static_cast<double>(dataset.size());
}

}  // namespace semback::attacks
