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

#include <memory>
#include <span>

#include "semback/data/dataset.hpp"
#include "semback/nn/model.hpp"
#include "semback/nn/train.hpp"

namespace semback::attacks {

/// Distillation-regularized poisoning. The loss of an example is
///   alpha * CE(f(x), y) + [clean] * (1 - alpha) * CosL(z_ref(x), z(x))
/// where z_ref are the logits of the clean reference model, treated as
/// constants. Backdoor examples get no distillation term.
struct AdaptiveConfig {
  double alpha = 0.5;
  std::shared_ptr<const nn::Model> reference;
  bool init_from_reference = true;

  void validate(const nn::Model* model = nullptr) const;
};

double adaptive_loss(std::span<const double> x, std::size_t label, const nn::Model& model,
                     const AdaptiveConfig& cfg, bool is_clean_sample);

/// Loss and its gradient with respect to the logits given both logit vectors.
double adaptive_loss_logits(std::span<const double> logits, std::span<const double> reference_logits,
                            std::size_t label, double alpha, bool is_clean_sample,
                            std::span<double> d_logits);

/// Mean adaptive loss over a dataset flagged with backdoor markers.
double mean_adaptive_loss(const nn::Model& model, const data::Dataset& data,
                          const AdaptiveConfig& cfg);

/// Trains on the poisoned data with the adaptive loss. Starts from the
/// reference parameters when cfg.init_from_reference is set, otherwise from the
/// recipe's seeded initialization. Honors recipe.adversarial like adv_train.
nn::Model adaptive_train(const nn::TrainRecipe& recipe, const AdaptiveConfig& cfg,
                         const data::Dataset& poisoned, const data::Dataset& val);

}  // namespace semback::attacks
