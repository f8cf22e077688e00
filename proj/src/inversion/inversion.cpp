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

#include "semback/inversion/inversion.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "semback/distances/distances.hpp"
#include "semback/error.hpp"
#include "semback/parallel.hpp"
#include "semback/seed.hpp"

namespace semback::inversion {

void InversionConfig::validate() const {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw ConfigError("inversion: gamma must be >= 0");
  if (feature_iterations < 1 || prior_iterations < 1)
    throw ConfigError("inversion: iteration counts must be >= 1");
  if (!(feature_learning_rate > 0.0) || !(prior_learning_rate > 0.0))
    throw ConfigError("inversion: learning rates must be positive");
  if (feature_init_noise < 0.0) throw ConfigError("inversion: feature noise must be >= 0");
  if (per_class < 1) throw ConfigError("inversion: per-class count must be >= 1");
  if (!(confidence_floor > 0.0 && confidence_floor < 1.0))
    throw ConfigError("inversion: confidence floor must lie in (0, 1)");
  if (max_attempts < 1) throw ConfigError("inversion: retry cap must be >= 1");
  if (generator_seed_dim < 1) throw ConfigError("inversion: generator seed dimension must be >= 1");
  for (const auto w : generator_hidden)
    if (w == 0) throw ConfigError("inversion: generator hidden widths must be positive");
}

namespace {

class Adam {
 public:
  Adam(std::size_t n, double lr) : lr_(lr), m_(n, 0.0), v_(n, 0.0) {}

  void step(std::span<double> params, std::span<const double> grad) {
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    ++t_;
    const double c1 = 1.0 - std::pow(beta1, t_);
    const double c2 = 1.0 - std::pow(beta2, t_);
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = beta1 * m_[i] + (1.0 - beta1) * grad[i];
      v_[i] = beta2 * v_[i] + (1.0 - beta2) * grad[i] * grad[i];
      params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps);
    }
  }

 private:
  double lr_;
  std::vector<double> m_;
  std::vector<double> v_;
  int t_ = 0;
};

// d softmax(z)_y / dz, scaled.
void add_confidence_grad(std::span<const double> z, std::size_t y, double weight,
                         std::span<double> dz) {
  const auto p = nn::softmax(z);
  for (std::size_t j = 0; j < z.size(); ++j)
    dz[j] += weight * p[y] * ((j == y ? 1.0 : 0.0) - p[j]);
}

double confidence_of(std::span<const double> z, std::size_t y) { return nn::softmax(z)[y]; }

void check_finite(double value, int iteration, const char* what) {
  if (!std::isfinite(value))
    throw NumericError(std::string(what) + ": non-finite objective at iteration " +
                       std::to_string(iteration));
}

// Seeded generator. With a start point the output layer bias is logit(start)
// and its weights are shrunk by cfg.generator_output_scale, so g begins close
// to the start point.
nn::Model initial_generator(const InversionConfig& cfg, std::size_t d, std::span<const double> start,
                            std::uint64_t seed) {
  nn::Model gen = nn::Model::initialize(generator_topology(cfg, d), seed);
  if (start.empty()) return gen;
  const std::size_t last = gen.topology().layer_count() - 1;
  for (auto& w : gen.weights(last)) w *= cfg.generator_output_scale;
  auto b = gen.biases(last);
  for (std::size_t i = 0; i < d; ++i) {
    const double v = std::clamp(start[i], 1e-3, 1.0 - 1e-3);
    b[i] = std::log(v / (1.0 - v));
  }
  return gen;
}

// Loss to minimize given the classifier trace on the current input. Fills the
// gradients with respect to the logits and the features.
using InputLoss = std::function<double(const nn::Trace& trace, std::span<double> d_logits,
                                       std::span<double> d_features)>;

struct Fit {
  std::vector<double> sample;
  double initial_loss = 0.0;
  double best_loss = 0.0;
};

Fit optimize_generator(const nn::Model& model, const InversionConfig& cfg, std::uint64_t seed,
                       std::span<const double> start, const InputLoss& loss_fn, const char* what) {
  const std::size_t d = model.input_dim();
  nn::Model gen = initial_generator(cfg, d, start, derive_seed(seed, "generator"));
  std::vector<double> latent(cfg.generator_seed_dim);
  {
    std::mt19937_64 rng(derive_seed(seed, "latent"));
    std::normal_distribution<double> normal(0.0, 1.0);
    for (auto& v : latent) v = normal(rng);
  }
  const std::size_t k = model.output_dim();
  nn::Trace gtrace, ctrace;
  nn::Workspace ws;
  std::vector<double> d_logits(k), d_features(model.feature_dim()), dx(d);
  std::vector<double> grad(gen.parameters().size());
  Adam adam(grad.size(), cfg.prior_learning_rate);

  Fit fit;
  for (int it = 0; it <= cfg.prior_iterations; ++it) {
    nn::forward(gen, latent, gtrace);
    nn::forward(model, gtrace.output(), ctrace);
    std::fill(d_logits.begin(), d_logits.end(), 0.0);
    std::fill(d_features.begin(), d_features.end(), 0.0);
    const double loss = loss_fn(ctrace, d_logits, d_features);
    check_finite(loss, it, what);
    if (it == 0) fit.initial_loss = loss;
    if (it == 0 || loss < fit.best_loss) {
      fit.best_loss = loss;
      fit.sample.assign(gtrace.output().begin(), gtrace.output().end());
    }
    if (it == cfg.prior_iterations) break;
    nn::backward(model, ctrace, d_logits, d_features, {}, dx, ws);
    std::fill(grad.begin(), grad.end(), 0.0);
    nn::backward(gen, gtrace, dx, {}, grad, {}, ws);
    adam.step(gen.mutable_parameters(), grad);
  }
  return fit;
}

Fit optimize_input(const nn::Model& model, const InversionConfig& cfg, std::uint64_t seed,
                   std::span<const double> start,
                   const InputLoss& loss_fn, const char* what) {
  const std::size_t d = model.input_dim();
  std::vector<double> x(start.begin(), start.end());
  if (x.empty()) {
    x.resize(d);
    std::mt19937_64 rng(derive_seed(seed, "direct-init"));
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    for (auto& v : x) v = uniform(rng);
  }
  nn::Trace trace;
  nn::Workspace ws;
  std::vector<double> d_logits(model.output_dim()), d_features(model.feature_dim()), dx(d);
  Adam adam(d, cfg.prior_learning_rate);

  Fit fit;
  for (int it = 0; it <= cfg.prior_iterations; ++it) {
    nn::forward(model, x, trace);
    std::fill(d_logits.begin(), d_logits.end(), 0.0);
    std::fill(d_features.begin(), d_features.end(), 0.0);
    const double loss = loss_fn(trace, d_logits, d_features);
    check_finite(loss, it, what);
    if (it == 0) fit.initial_loss = loss;
    if (it == 0 || loss < fit.best_loss) {
      fit.best_loss = loss;
      fit.sample = x;
    }
    if (it == cfg.prior_iterations) break;
    nn::backward(model, trace, d_logits, d_features, {}, dx, ws);
    adam.step(x, dx);
    for (auto& v : x) v = std::clamp(v, 0.0, 1.0);
  }
  return fit;
}

PriorFit finish(const nn::Model& model, const Fit& fit, std::span<const double> feature_target,
                std::size_t y) {
  PriorFit out;
  out.sample = fit.sample;
  out.initial_objective = -fit.initial_loss;
  out.objective = -fit.best_loss;
  nn::Trace trace;
  nn::forward(model, out.sample, trace);
  out.confidence = confidence_of(trace.output(), y);
  out.feature_cosine = distances::cosine_similarity(feature_target, trace.features());
  return out;
}

// -(gamma * cos(h(x), h*) + softmax(z)_y)
InputLoss prior_objective(std::span<const double> h_star, std::size_t y, double gamma) {
  return [h_star, y, gamma](const nn::Trace& t, std::span<double> dz, std::span<double> dh) {
    const double cos = distances::cosine_similarity(h_star, t.features());
    const double conf = confidence_of(t.output(), y);
    distances::accumulate_cosine_similarity_grad(h_star, t.features(), -gamma, dh);
    add_confidence_grad(t.output(), y, -1.0, dz);
    return -(gamma * cos + conf);
  };
}

void check_start(const nn::Model& model, std::span<const double> start) {
  if (!start.empty()) nn::check_input(model, start);
}

void check_reference(const nn::Model& model, std::span<const double> x, std::size_t y) {
  nn::check_input(model, x);
  nn::check_label(model, y);
  if (!model.all_finite()) throw NumericError("inversion: model parameters are not finite");
}

std::vector<double> features_of(const nn::Model& model, std::span<const double> x) {
  nn::Trace trace;
  nn::forward(model, x, trace);
  return {trace.features().begin(), trace.features().end()};
}

}  // namespace

nn::Topology generator_topology(const InversionConfig& cfg, std::size_t input_dim) {
  nn::Topology t;
  t.input_dim = cfg.generator_seed_dim;
  t.hidden = cfg.generator_hidden;
  t.output_dim = input_dim;
  t.hidden_activation = nn::Activation::Relu;
  t.output_activation = nn::Activation::Sigmoid;
  return t;
}

FeatureInversion invert_features(const nn::Model& model, std::span<const double> x, std::size_t y,
                                 const InversionConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  check_reference(model, x, y);
  const std::size_t layer = model.topology().layer_count() - 1;
  const auto W = model.weights(layer);
  const auto b = model.biases(layer);
  const std::size_t k = model.output_dim();
  const std::size_t f = model.feature_dim();

  const std::vector<double> h = features_of(model, x);
  // Post-ReLU features are nonnegative; keep the search inside that range.
  const bool nonnegative = model.topology().layer_count() > 1 &&
                           model.topology().hidden_activation != nn::Activation::Identity;
  std::vector<double> hat = h;
  {
    std::mt19937_64 rng(derive_seed(seed, "feature-init"));
    std::normal_distribution<double> normal(0.0, cfg.feature_init_noise);
    for (auto& v : hat) v += normal(rng);
    if (nonnegative)
      for (auto& v : hat) v = std::max(v, 0.0);
  }

  std::vector<double> z(k), dz(k), grad(f);
  auto logits = [&](std::span<const double> v) {
    for (std::size_t r = 0; r < k; ++r) {
      double s = b[r];
      for (std::size_t c = 0; c < f; ++c) s += W[r * f + c] * v[c];
      z[r] = s;
    }
  };

  Adam adam(f, cfg.feature_learning_rate);
  FeatureInversion out;
  for (int it = 0; it <= cfg.feature_iterations; ++it) {
    logits(hat);
    const double cos = distances::cosine_similarity(h, hat);
    const double conf = confidence_of(z, y);
    const double objective = cfg.gamma * cos - conf;
    check_finite(objective, it, "feature inversion");
    if (it == 0) {
      out.initial_objective = objective;
      out.initial_cosine = cos;
    }
    if (it == 0 || objective < out.objective) {
      out.objective = objective;
      out.target = hat;
      out.confidence = conf;
      out.cosine_to_reference = cos;
    }
    if (it == cfg.feature_iterations) break;
    std::fill(grad.begin(), grad.end(), 0.0);
    distances::accumulate_cosine_similarity_grad(h, hat, cfg.gamma, grad);
    std::fill(dz.begin(), dz.end(), 0.0);
    add_confidence_grad(z, y, -1.0, dz);
    for (std::size_t r = 0; r < k; ++r)
      for (std::size_t c = 0; c < f; ++c) grad[c] += W[r * f + c] * dz[r];
    adam.step(hat, grad);
    if (nonnegative)
      for (auto& v : hat) v = std::max(v, 0.0);
  }
  return out;
}

PriorFit fit_prior(const nn::Model& model, std::span<const double> h_star, std::size_t y,
                   const InversionConfig& cfg, std::uint64_t seed, std::span<const double> start) {
  cfg.validate();
  nn::check_label(model, y);
  if (h_star.size() != model.feature_dim()) throw ShapeError("fit_prior: feature target has the wrong size");
  check_start(model, start);
  const Fit fit = optimize_generator(model, cfg, seed, start, prior_objective(h_star, y, cfg.gamma), "prior fit");
  return finish(model, fit, h_star, y);
}

PriorFit fit_direct(const nn::Model& model, std::span<const double> h_star, std::size_t y,
                    const InversionConfig& cfg, std::uint64_t seed, std::span<const double> start) {
  cfg.validate();
  nn::check_label(model, y);
  if (h_star.size() != model.feature_dim()) throw ShapeError("fit_direct: feature target has the wrong size");
  check_start(model, start);
  const Fit fit = optimize_input(model, cfg, seed, start, prior_objective(h_star, y, cfg.gamma), "direct fit");
  return finish(model, fit, h_star, y);
}

PriorFit fit_single_step(const nn::Model& model, std::span<const double> x, std::size_t y,
                         const InversionConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  check_reference(model, x, y);
  const std::vector<double> h = features_of(model, x);
  const double gamma = cfg.gamma;
  InputLoss loss = [&h, y, gamma](const nn::Trace& t, std::span<double> dz, std::span<double> dh) {
    const double cos = distances::cosine_similarity(h, t.features());
    distances::accumulate_cosine_similarity_grad(h, t.features(), gamma, dh);
    add_confidence_grad(t.output(), y, -1.0, dz);
    return gamma * cos - confidence_of(t.output(), y);
  };
  const std::span<const double> start = cfg.start_at_reference ? x : std::span<const double>{};
  return finish(model, optimize_generator(model, cfg, seed, start, loss, "single-step fit"), h, y);
}

PriorFit fit_invert_only(const nn::Model& model, std::span<const double> x, std::size_t y,
                         const InversionConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  check_reference(model, x, y);
  const std::vector<double> h = features_of(model, x);
  InputLoss loss = [&h](const nn::Trace& t, std::span<double>, std::span<double> dh) {
    distances::accumulate_cosine_similarity_grad(h, t.features(), -1.0, dh);
    return -distances::cosine_similarity(h, t.features());
  };
  const std::span<const double> start = cfg.start_at_reference ? x : std::span<const double>{};
  return finish(model, optimize_generator(model, cfg, seed, start, loss, "invert-only fit"), h, y);
}

const char* variant_name(Variant variant) noexcept {
  switch (variant) {
    case Variant::TwoStep: return "two-step";
    case Variant::WithoutPrior: return "without-prior";
    case Variant::SingleStep: return "single-step";
    case Variant::InvertOnly: return "invert-only";
  }
  return "?";
}

Variant parse_variant(const std::string& text) {
  for (const Variant v : {Variant::TwoStep, Variant::WithoutPrior, Variant::SingleStep, Variant::InvertOnly})
    if (text == variant_name(v)) return v;
  throw ConfigError("unknown inversion variant '" + text + "'");
}

PriorFit generate_sample(const nn::Model& model, std::span<const double> x, std::size_t y,
                         const InversionConfig& cfg, Variant variant, std::uint64_t seed) {
  const std::span<const double> start = cfg.start_at_reference ? x : std::span<const double>{};
  switch (variant) {
    case Variant::TwoStep: {
      const auto h = invert_features(model, x, y, cfg, derive_seed(seed, "feature"));
      return fit_prior(model, h.target, y, cfg, derive_seed(seed, "prior"), start);
    }
    case Variant::WithoutPrior: {
      const auto h = invert_features(model, x, y, cfg, derive_seed(seed, "feature"));
      return fit_direct(model, h.target, y, cfg, derive_seed(seed, "direct"), start);
    }
    case Variant::SingleStep:
      return fit_single_step(model, x, y, cfg, derive_seed(seed, "single-step"));
    case Variant::InvertOnly:
      return fit_invert_only(model, x, y, cfg, derive_seed(seed, "invert-only"));
  }
  throw ConfigError("unknown inversion variant");
}

distances::DistanceTestSet generate_inverted_ablation(const nn::Model& model,
                                                      const data::Dataset& train_data,
                                                      const InversionConfig& cfg, Variant variant) {
  cfg.validate();
  if (train_data.dim() != model.input_dim()) throw ShapeError("inversion: training data dimension mismatch");
  if (train_data.classes != model.output_dim()) throw ShapeError("inversion: class count mismatch");
  const std::size_t k = model.output_dim();
  std::vector<std::vector<std::size_t>> by_class(k);
  for (std::size_t i = 0; i < train_data.size(); ++i)
    if (!train_data.is_backdoor(i)) by_class[train_data.labels[i]].push_back(i);
  for (std::size_t c = 0; c < k; ++c)
    if (by_class[c].empty())
      throw DataError("inversion: no training example of class " + std::to_string(c));

  const bool filter = variant != Variant::InvertOnly;
  const int attempts = filter ? cfg.max_attempts : 1;
  const std::size_t slots = k * cfg.per_class;
  std::vector<PriorFit> fits(slots);
  std::vector<distances::GeneratedSample> info(slots);
  parallel_for(slots, [&](std::size_t slot) {
    const std::size_t y = slot / cfg.per_class;
    const std::uint64_t slot_seed = derive_seed(cfg.seed, "slot", slot);
    for (int a = 0; a < attempts; ++a) {
      const std::uint64_t s = derive_seed(slot_seed, "attempt", static_cast<std::uint64_t>(a));
      std::mt19937_64 rng(s);
      const auto& pool = by_class[y];
      const std::size_t ref = pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
      PriorFit fit = generate_sample(model, train_data.input(ref), y, cfg, variant, derive_seed(s, "sample"));
      if (!filter || fit.confidence >= cfg.confidence_floor) {
        info[slot] = {y, ref, a, fit.confidence, fit.feature_cosine};
        fits[slot] = std::move(fit);
        return;
      }
    }
    throw GenerationExhausted(static_cast<int>(y));
  });

  distances::DistanceTestSet set;
  set.kind = distances::SetKind::Inverted;
  set.inputs = data::Samples(model.input_dim());
  set.inputs.reserve(slots);
  for (const auto& f : fits) set.inputs.push_back(f.sample);
  set.model_fingerprint = model.fingerprint();
  set.generated = std::move(info);
  set.variant = variant_name(variant);
  return set;
}

distances::DistanceTestSet generate_inverted_set(const nn::Model& model,
                                                 const data::Dataset& train_data,
                                                 const InversionConfig& cfg) {
  return generate_inverted_ablation(model, train_data, cfg, Variant::TwoStep);
}

}  // namespace semback::inversion
