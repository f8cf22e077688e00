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

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "semback/data/dataset.hpp"
#include "semback/distances/test_set.hpp"
#include "semback/inversion/config.hpp"
#include "semback/nn/model.hpp"

namespace semback::inversion {

struct FeatureInversion {
  std::vector<double> target;  // h*
  double initial_objective = 0.0;
  double objective = 0.0;
  /// softmax(Z(h*))_y
  double confidence = 0.0;
  /// cos_sim(h(x), h*)
  double cosine_to_reference = 0.0;
  double initial_cosine = 0.0;
};

/// Minimizes gamma * cos_sim(h(x), h) - softmax(Z(h))_y over feature vectors h
/// with Adam, starting from h(x) plus Gaussian noise. Returns the best iterate.
FeatureInversion invert_features(const nn::Model& model, std::span<const double> x, std::size_t y,
                                 const InversionConfig& cfg, std::uint64_t seed);

struct PriorFit {
  std::vector<double> sample;  // x*
  double initial_objective = 0.0;
  double objective = 0.0;
  /// softmax(f(x*))_y
  double confidence = 0.0;
  /// cos_sim(h(x*), h*)
  double feature_cosine = 0.0;
};

/// Topology of the prior generator for a d-dimensional input domain.
nn::Topology generator_topology(const InversionConfig& cfg, std::size_t input_dim);

/// Fits a fresh generator g so that x = g(seed vector) maximizes
/// gamma * cos_sim(h(x), h*) + softmax(f(x))_y. Returns the best iterate.
/// With a start point the generator begins near it, otherwise at its seeded
/// initialization.
PriorFit fit_prior(const nn::Model& model, std::span<const double> h_star, std::size_t y,
                   const InversionConfig& cfg, std::uint64_t seed,
                   std::span<const double> start = {});

enum class Variant { TwoStep, WithoutPrior, SingleStep, InvertOnly };

const char* variant_name(Variant variant) noexcept;
Variant parse_variant(const std::string& text);

/// Optimizes x in [0,1]^d directly with clipped Adam steps for the prior-step
/// objective, from the start point or a uniform random one.
PriorFit fit_direct(const nn::Model& model, std::span<const double> h_star, std::size_t y,
                    const InversionConfig& cfg, std::uint64_t seed,
                    std::span<const double> start = {});

/// Generator trained against the feature objective composed with g:
/// minimize gamma * cos_sim(h(x), h(g)) - softmax(f(g))_y.
PriorFit fit_single_step(const nn::Model& model, std::span<const double> x, std::size_t y,
                         const InversionConfig& cfg, std::uint64_t seed);

/// Generator that only reproduces h(x): maximize cos_sim(h(g), h(x)).
PriorFit fit_invert_only(const nn::Model& model, std::span<const double> x, std::size_t y,
                         const InversionConfig& cfg, std::uint64_t seed);

/// One emitted sample of a given variant for reference example (x, y).
PriorFit generate_sample(const nn::Model& model, std::span<const double> x, std::size_t y,
                         const InversionConfig& cfg, Variant variant, std::uint64_t seed);

/// cfg.per_class samples for every class. Each attempt draws a random training
/// example of the class; attempts under the confidence floor are retried with a
/// new example up to cfg.max_attempts. InvertOnly keeps its first attempt.
distances::DistanceTestSet generate_inverted_set(const nn::Model& model,
                                                 const data::Dataset& train_data,
                                                 const InversionConfig& cfg);
distances::DistanceTestSet generate_inverted_ablation(const nn::Model& model,
                                                      const data::Dataset& train_data,
                                                      const InversionConfig& cfg, Variant variant);

}  // namespace semback::inversion
