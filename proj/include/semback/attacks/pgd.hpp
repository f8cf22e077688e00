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

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "semback/data/dataset.hpp"
#include "semback/nn/model.hpp"

namespace semback::attacks {

/// Untargeted l_inf PGD on the cross-entropy loss. No random start.
struct PgdConfig {
  double step_size = 0.01;
  int steps = 10;
  /// Radius of the l_inf ball around the original input; empty for the
  /// unclipped variant.
  std::optional<double> epsilon;
  /// Clip every iterate to [0,1]^d.
  bool clip_to_domain = true;

  void validate() const;
};

PgdConfig clipped_pgd(double epsilon, double step_size, int steps);
PgdConfig unclipped_pgd(double step_size, int steps);

/// Settings of the distance test set attack: step 0.01, 10 steps, no ball.
PgdConfig adversarial_set_pgd();
/// Robust-accuracy evaluation: clipped, 20 steps of epsilon/8.
PgdConfig robust_eval_pgd(double epsilon);

/// Reusable buffers for pgd_inplace.
struct PgdWorkspace {
  std::vector<double> origin;
  std::vector<double> grad;
  std::vector<double> dz;
  nn::Trace trace;
  nn::Workspace back;
};

/// Iterates x <- x + step * sign(grad_x loss) with sign(0) = 0, projecting to
/// the epsilon ball and the domain box as configured. Shapes are not checked.
void pgd_inplace(const nn::Model& model, std::span<double> x, std::size_t label,
                 const PgdConfig& cfg, PgdWorkspace& ws);

std::vector<double> pgd(const nn::Model& model, std::span<const double> x, std::size_t label,
                        const PgdConfig& cfg);

/// True iff the model classifies x correctly and x_adv incorrectly.
bool is_adversarial(const nn::Model& model, std::span<const double> x,
                    std::span<const double> x_adv, std::size_t label);

/// Accuracy on PGD-perturbed copies of the dataset.
double robust_accuracy(const nn::Model& model, const data::Dataset& dataset, const PgdConfig& cfg);

}  // namespace semback::attacks
