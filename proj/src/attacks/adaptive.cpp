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

#include "semback/attacks/adaptive.hpp"

#include <algorithm>

#include "semback/attacks/pgd.hpp"
#include "semback/distances/distances.hpp"
#include "semback/error.hpp"

namespace semback::attacks {

void AdaptiveConfig::validate(const nn::Model* model) const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("adaptive: alpha must be in [0,1]");
  if (!reference) throw ConfigError("adaptive: a clean reference model is required");
  if (model && !(model->topology() == reference->topology()))
    throw ShapeError("adaptive: model and reference topologies differ");
}

double adaptive_loss_logits(std::span<const double> logits, std::span<const double> reference_logits,
                            std::size_t label, double alpha, bool is_clean_sample,
                            std::span<double> d_logits) {
  nn::softmax(logits, d_logits);
  d_logits[label] -= 1.0;
  double value = alpha * nn::cross_entropy_logits(logits, label);
  for (auto& g : d_logits) g *= alpha;
  if (is_clean_sample && alpha < 1.0) {
    const double w = 1.0 - alpha;
    value += w * distances::cosine_distance(reference_logits, logits);
    distances::accumulate_cosine_distance_grad(reference_logits, logits, w, d_logits);
  }
  return value;
}

double adaptive_loss(std::span<const double> x, std::size_t label, const nn::Model& model,
                     const AdaptiveConfig& cfg, bool is_clean_sample) {
  cfg.validate(&model);
  nn::check_input(model, x);
  nn::check_label(model, label);
  nn::Trace trace, ref_trace;
  nn::forward(model, x, trace);
  nn::forward(*cfg.reference, x, ref_trace);
  std::vector<double> dz(model.output_dim());
  return adaptive_loss_logits(trace.output(), ref_trace.output(), label, cfg.alpha,
                              is_clean_sample, dz);
}

double mean_adaptive_loss(const nn::Model& model, const data::Dataset& data,
                          const AdaptiveConfig& cfg) {
  if (data.empty()) return 0.0;
  nn::Trace trace, ref_trace;
  std::vector<double> dz(model.output_dim());
  double sum = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    nn::forward(model, data.input(i), trace);
    const bool clean = !data.is_backdoor(i);
    if (clean && cfg.alpha < 1.0) nn::forward(*cfg.reference, data.input(i), ref_trace);
    sum += adaptive_loss_logits(trace.output(), clean && cfg.alpha < 1.0 ? ref_trace.output() : trace.output(),
                                data.labels[i], cfg.alpha, clean, dz);
  }
  return sum / static_cast<double>(data.size());
}

nn::Model adaptive_train(const nn::TrainRecipe& recipe, const AdaptiveConfig& cfg,
                         const data::Dataset& poisoned, const data::Dataset& val) {
  cfg.validate();
  recipe.validate();
  if (poisoned.empty()) throw ConfigError("adaptive_train: training data is empty");
  if (recipe.patience > 0 && recipe.max_epochs > 0 && val.empty())
    throw ConfigError("early stopping needs a non-empty validation set");
  nn::Model init = cfg.init_from_reference
                       ? *cfg.reference
                       : nn::initial_model(recipe, poisoned.dim(), poisoned.classes);
  cfg.validate(&init);

  nn::TrainHooks hooks;
  // Reference logits depend on the (possibly perturbed) input, so they are
  // recomputed per example from the trace input.
  auto ref_trace = std::make_shared<nn::Trace>();
  hooks.example_loss = [&poisoned, &cfg, ref_trace](std::size_t i, const nn::Trace& trace,
                                                    std::span<double> dz) {
    const bool clean = !poisoned.is_backdoor(i);
    const bool distill = clean && cfg.alpha < 1.0;
    if (distill) nn::forward(*cfg.reference, trace.post.front(), *ref_trace);
    return adaptive_loss_logits(trace.output(), distill ? ref_trace->output() : trace.output(),
                                poisoned.labels[i], cfg.alpha, clean, dz);
  };
  if (!val.empty())
    hooks.validation_loss = [&val, &cfg](const nn::Model& m) { return mean_adaptive_loss(m, val, cfg); };
  if (recipe.adversarial) {
    const auto pgd_cfg = clipped_pgd(recipe.adversarial->epsilon, recipe.adversarial->step_size,
                                     recipe.adversarial->steps);
    auto ws = std::make_shared<PgdWorkspace>();
    hooks.transform = [&poisoned, pgd_cfg, ws](const nn::Model& m, std::size_t i, std::span<double> x) {
      pgd_inplace(m, x, poisoned.labels[i], pgd_cfg, *ws);
    };
  }
  return nn::train_with_hooks(recipe, std::move(init), poisoned, hooks);
}

}  // namespace semback::attacks
