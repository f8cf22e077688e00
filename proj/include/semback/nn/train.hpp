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
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "semback/data/dataset.hpp"
#include "semback/nn/model.hpp"

namespace semback::nn {

enum class OptimizerKind { SgdMomentum, Adam };

/// Inner attack of adversarial training: l_inf PGD with projection to the
/// epsilon ball and the [0,1] box.
struct AdversarialTraining {
  double epsilon = 0.1;
  double step_size = 0.05;
  int steps = 3;
};

struct TrainRecipe {
  std::vector<std::size_t> hidden{64, 32};
  OptimizerKind optimizer = OptimizerKind::SgdMomentum;
  double learning_rate = 0.1;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  std::size_t batch_size = 100;
  int max_epochs = 100;
  /// Epochs without validation improvement before stopping; 0 disables early
  /// stopping and the final-epoch parameters are returned.
  int patience = 20;
  bool cosine_annealing = true;
  std::uint64_t seed = 0;
  std::optional<AdversarialTraining> adversarial;

  void validate() const;
  std::uint64_t fingerprint() const;
};

/// Learning rate used during `epoch` (0-based).
double scheduled_learning_rate(const TrainRecipe& recipe, int epoch) noexcept;

/// Loss of one example given the forward trace of the current model. Writes
/// the gradient of the loss with respect to the network output into d_output.
using ExampleLoss = std::function<double(std::size_t index, const Trace& trace,
                                         std::span<double> d_output)>;

/// Mean loss over a dataset, used for early stopping.
using ValidationLoss = std::function<double(const Model& model)>;

/// Optional per-example input transform applied before the gradient step
/// (adversarial training). Receives the current model.
using InputTransform = std::function<void(const Model& model, std::size_t index,
                                          std::span<double> x)>;

struct TrainHooks {
  ExampleLoss example_loss;
  ValidationLoss validation_loss;
  InputTransform transform;
};

/// Minibatch training loop shared by every recipe: per-epoch shuffling driven
/// only by recipe.seed, cosine annealing, SGD-momentum or Adam with decoupled
/// L2 term added to the gradient, early stopping with best-checkpoint restore.
Model train_with_hooks(const TrainRecipe& recipe, Model init, const data::Dataset& data,
                       const TrainHooks& hooks);

/// Mean cross-entropy of a classifier over a dataset.
double mean_cross_entropy(const Model& model, const data::Dataset& data);
double accuracy(const Model& model, const data::Dataset& data);

/// Fresh classifier for the dataset shape, seeded from recipe.seed.
Model initial_model(const TrainRecipe& recipe, std::size_t input_dim, std::size_t classes);

/// Cross-entropy training from the recipe's seeded initialization.
Model train(const TrainRecipe& recipe, const data::Dataset& data, const data::Dataset& val);
Model train(const TrainRecipe& recipe, Model init, const data::Dataset& data,
            const data::Dataset& val);

/// Adversarial training: every example of a batch is replaced by its clipped
/// PGD perturbation under the current parameters before the gradient step.
/// recipe.adversarial must be set.
Model adv_train(const TrainRecipe& recipe, const data::Dataset& data, const data::Dataset& val);
Model adv_train(const TrainRecipe& recipe, Model init, const data::Dataset& data,
                const data::Dataset& val);

}  // namespace semback::nn
