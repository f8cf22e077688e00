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

#include "semback/nn/train.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "semback/attacks/pgd.hpp"
#include "semback/error.hpp"
#include "semback/seed.hpp"

namespace semback::nn {

void TrainRecipe::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("recipe: learning rate must be positive");
  if (batch_size < 1) throw ConfigError("recipe: batch size must be at least 1");
  if (max_epochs < 0) throw ConfigError("recipe: max epochs must be non-negative");
  if (patience < 0) throw ConfigError("recipe: patience must be non-negative");
  if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("recipe: momentum must be in [0,1)");
  if (weight_decay < 0.0) throw ConfigError("recipe: weight decay must be non-negative");
  if (adversarial) {
    if (adversarial->epsilon < 0.0) throw ConfigError("recipe: epsilon must be non-negative");
    if (!(adversarial->step_size > 0.0)) throw ConfigError("recipe: PGD step size must be positive");
    if (adversarial->steps < 1) throw ConfigError("recipe: PGD steps must be at least 1");
  }
}

std::uint64_t TrainRecipe::fingerprint() const {
  std::ostringstream s;
  s << "hidden";
  for (const auto w : hidden) s << ':' << w;
  s << "|opt=" << static_cast<int>(optimizer) << "|lr=" << data::format_double(learning_rate)
    << "|mom=" << data::format_double(momentum) << "|wd=" << data::format_double(weight_decay)
    << "|bs=" << batch_size << "|epochs=" << max_epochs << "|patience=" << patience
    << "|cos=" << cosine_annealing << "|seed=" << seed;
  if (adversarial)
    s << "|adv=" << data::format_double(adversarial->epsilon) << ','
      << data::format_double(adversarial->step_size) << ',' << adversarial->steps;
  return fnv1a(s.str());
}

double scheduled_learning_rate(const TrainRecipe& recipe, int epoch) noexcept {
  if (!recipe.cosine_annealing || recipe.max_epochs == 0) return recipe.learning_rate;
  const double t = static_cast<double>(epoch) / static_cast<double>(recipe.max_epochs);
  return recipe.learning_rate * (1.0 + std::cos(std::numbers::pi * t)) / 2.0;
}

namespace {

class Optimizer {
 public:
  Optimizer(const TrainRecipe& recipe, std::size_t n)
      : recipe_(recipe), first_(n, 0.0), second_(recipe.optimizer == OptimizerKind::Adam ? n : 0, 0.0) {}

  void step(std::span<double> params, std::span<double> grad, double lr) {
    const double wd = recipe_.weight_decay;
    if (recipe_.optimizer == OptimizerKind::SgdMomentum) {
      const double mu = recipe_.momentum;
      for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grad[i] + wd * params[i];
        first_[i] = mu * first_[i] + g;
        params[i] -= lr * first_[i];
      }
      return;
    }
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    ++t_;
    const double c1 = 1.0 - std::pow(beta1, t_);
    const double c2 = 1.0 - std::pow(beta2, t_);
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double g = grad[i] + wd * params[i];
      first_[i] = beta1 * first_[i] + (1.0 - beta1) * g;
      second_[i] = beta2 * second_[i] + (1.0 - beta2) * g * g;
      params[i] -= lr * (first_[i] / c1) / (std::sqrt(second_[i] / c2) + eps);
    }
  }

 private:
  const TrainRecipe& recipe_;
  std::vector<double> first_;
  std::vector<double> second_;
  int t_ = 0;
};

void check_dataset(const Model& model, const data::Dataset& d, const char* what) {
  if (d.dim() != model.input_dim())
    throw ShapeError(std::string(what) + " has dimension " + std::to_string(d.dim()) +
                     ", model expects " + std::to_string(model.input_dim()));
  for (const auto y : d.labels) check_label(model, y);
}

}  // namespace

Model train_with_hooks(const TrainRecipe& recipe, Model init, const data::Dataset& data,
                       const TrainHooks& hooks) {
  recipe.validate();
  if (data.empty()) throw ConfigError("training data is empty");
  check_dataset(init, data, "training data");
  if (!init.all_finite()) throw NumericError("initial parameters are not finite");

  Model model = std::move(init);
  model.set_recipe_fingerprint(recipe.fingerprint());
  if (recipe.max_epochs == 0) return model;

  const bool early_stopping = recipe.patience > 0 && hooks.validation_loss;
  std::vector<double> best(model.parameters().begin(), model.parameters().end());
  double best_loss = early_stopping ? hooks.validation_loss(model) : 0.0;
  int since_best = 0;

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(derive_seed(recipe.seed, "shuffle"));

  const std::size_t n_params = model.parameters().size();
  Optimizer optimizer(recipe, n_params);
  std::vector<double> grad(n_params);
  std::vector<double> x(data.dim());
  std::vector<double> d_output(model.output_dim());
  Trace trace;
  Workspace ws;

  for (int epoch = 0; epoch < recipe.max_epochs; ++epoch) {
    const double lr = scheduled_learning_rate(recipe, epoch);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += recipe.batch_size) {
      const std::size_t end = std::min(order.size(), start + recipe.batch_size);
      std::fill(grad.begin(), grad.end(), 0.0);
      double batch_loss = 0.0;
      for (std::size_t b = start; b < end; ++b) {
        const std::size_t i = order[b];
        const auto row = data.input(i);
        std::copy(row.begin(), row.end(), x.begin());
        if (hooks.transform) hooks.transform(model, i, x);
        forward(model, x, trace);
        batch_loss += hooks.example_loss(i, trace, d_output);
        backward(model, trace, d_output, {}, grad, {}, ws);
      }
      const double scale = 1.0 / static_cast<double>(end - start);
      batch_loss *= scale;
      if (!std::isfinite(batch_loss)) throw TrainingDiverged(epoch);
      for (auto& g : grad) g *= scale;
      optimizer.step(model.mutable_parameters(), grad, lr);
    }
    if (!model.all_finite()) throw TrainingDiverged(epoch);
    if (early_stopping) {
      const double val_loss = hooks.validation_loss(model);
      if (!std::isfinite(val_loss)) throw TrainingDiverged(epoch);
      if (val_loss < best_loss) {
        best_loss = val_loss;
        std::copy(model.parameters().begin(), model.parameters().end(), best.begin());
        since_best = 0;
      } else if (++since_best >= recipe.patience) {
        break;
      }
    }
  }
  if (early_stopping)
    std::copy(best.begin(), best.end(), model.mutable_parameters().begin());
  return model;
}

double mean_cross_entropy(const Model& model, const data::Dataset& data) {
  if (data.empty()) return 0.0;
  Trace trace;
  double sum = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    forward(model, data.input(i), trace);
    sum += cross_entropy_logits(trace.output(), data.labels[i]);
  }
  return sum / static_cast<double>(data.size());
}

double accuracy(const Model& model, const data::Dataset& data) {
  if (data.empty()) return 0.0;
  Trace trace;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    forward(model, data.input(i), trace);
    correct += argmax(trace.output()) == data.labels[i];
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

Model initial_model(const TrainRecipe& recipe, std::size_t input_dim, std::size_t classes) {
  return Model::initialize(classifier_topology(input_dim, recipe.hidden, classes), recipe.seed);
}

namespace {

TrainHooks cross_entropy_hooks(const data::Dataset& data, const data::Dataset& val) {
  TrainHooks hooks;
  hooks.example_loss = [&data](std::size_t i, const Trace& trace, std::span<double> dz) {
    softmax(trace.output(), dz);
    dz[data.labels[i]] -= 1.0;
    return cross_entropy_logits(trace.output(), data.labels[i]);
  };
  if (!val.empty())
    hooks.validation_loss = [&val](const Model& m) { return mean_cross_entropy(m, val); };
  return hooks;
}

void check_val(const TrainRecipe& recipe, const Model& model, const data::Dataset& val) {
  if (recipe.patience > 0 && recipe.max_epochs > 0 && val.empty())
    throw ConfigError("early stopping needs a non-empty validation set");
  if (!val.empty()) check_dataset(model, val, "validation data");
}

}  // namespace

Model train(const TrainRecipe& recipe, Model init, const data::Dataset& data,
            const data::Dataset& val) {
  if (recipe.adversarial) throw ConfigError("train: recipe has an adversarial sub-config, use adv_train");
  check_val(recipe, init, val);
  return train_with_hooks(recipe, std::move(init), data, cross_entropy_hooks(data, val));
}

Model train(const TrainRecipe& recipe, const data::Dataset& data, const data::Dataset& val) {
  return train(recipe, initial_model(recipe, data.dim(), data.classes), data, val);
}

Model adv_train(const TrainRecipe& recipe, Model init, const data::Dataset& data,
                const data::Dataset& val) {
  if (!recipe.adversarial) throw ConfigError("adv_train: recipe has no adversarial sub-config");
  recipe.validate();
  check_val(recipe, init, val);
  TrainHooks hooks = cross_entropy_hooks(data, val);
  const auto cfg = attacks::clipped_pgd(recipe.adversarial->epsilon, recipe.adversarial->step_size,
                                        recipe.adversarial->steps);
  auto ws = std::make_shared<attacks::PgdWorkspace>();
  hooks.transform = [&data, cfg, ws](const Model& m, std::size_t i, std::span<double> x) {
    attacks::pgd_inplace(m, x, data.labels[i], cfg, *ws);
  };
  return train_with_hooks(recipe, std::move(init), data, hooks);
}

Model adv_train(const TrainRecipe& recipe, const data::Dataset& data, const data::Dataset& val) {
  return adv_train(recipe, initial_model(recipe, data.dim(), data.classes), data, val);
}

}  // namespace semback::nn
