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
#include <span>
#include <string>
#include <vector>

#include "semback/data/dataset.hpp"
#include "semback/nn/model.hpp"

namespace semback::distances {

enum class SampleDistance { CE, KL, Cos, CosL, Label };
enum class Aggregation { Avg, Med, Std, Max };

inline constexpr SampleDistance kAllSampleDistances[] = {
    SampleDistance::CE, SampleDistance::KL, SampleDistance::Cos, SampleDistance::CosL,
    SampleDistance::Label};
inline constexpr Aggregation kAllAggregations[] = {Aggregation::Avg, Aggregation::Med,
                                                   Aggregation::Std, Aggregation::Max};

const char* name(SampleDistance kind) noexcept;
const char* name(Aggregation kind) noexcept;
SampleDistance parse_sample_distance(const std::string& text);
Aggregation parse_aggregation(const std::string& text);

/// Lower clamp on probabilities inside the logarithms of CE and KL.
inline constexpr double kProbabilityFloor = 1e-12;

/// -sum p_i log q_i
double cross_entropy(std::span<const double> p, std::span<const double> q) noexcept;
/// sum p_i log(p_i / q_i), with 0 log 0 = 0
double kl_divergence(std::span<const double> p, std::span<const double> q) noexcept;
/// 1 - <a,b> / (|a| |b|), clamped to [0, 2]. Two zero vectors have distance 0,
/// a zero and a non-zero vector distance 1.
double cosine_distance(std::span<const double> a, std::span<const double> b) noexcept;

/// grad += weight * d cosine_distance(a, b) / d b
void accumulate_cosine_distance_grad(std::span<const double> a, std::span<const double> b,
                                     double weight, std::span<double> grad) noexcept;

/// Cosine similarity with norms regularized by 1e-12 (0 for a zero vector).
double cosine_similarity(std::span<const double> a, std::span<const double> b) noexcept;
/// grad += weight * d cosine_similarity(a, b) / d b
void accumulate_cosine_similarity_grad(std::span<const double> a, std::span<const double> b,
                                       double weight, std::span<double> grad) noexcept;

/// Outputs of one model on a list of inputs, kept for repeated comparisons.
struct Evaluation {
  std::size_t classes = 0;
  std::vector<double> logits;  // n x k
  std::vector<double> probs;   // n x k
  std::vector<std::size_t> labels;

  std::size_t size() const noexcept { return labels.size(); }
  std::span<const double> logit(std::size_t i) const noexcept {
    return std::span<const double>(logits).subspan(i * classes, classes);
  }
  std::span<const double> prob(std::size_t i) const noexcept {
    return std::span<const double>(probs).subspan(i * classes, classes);
  }
};

Evaluation evaluate(const nn::Model& model, const data::Samples& inputs);

/// Distance of one sample given cached outputs of the two models at index i.
/// For CE and KL the first model supplies p and the second q.
double sample_distance(SampleDistance kind, const Evaluation& first, const Evaluation& second,
                       std::size_t i) noexcept;
double sample_distance(SampleDistance kind, const nn::Model& first, const nn::Model& second,
                       std::span<const double> x);
std::vector<double> sample_distances(SampleDistance kind, const Evaluation& first,
                                     const Evaluation& second);

/// Empirical statistic of a non-empty list; std uses the n-1 divisor (0 for
/// n = 1) and the median of an even list averages the two central values.
double aggregate(std::span<const double> values, Aggregation kind);

double model_distance(const nn::Model& first, const nn::Model& second, const data::Samples& set,
                      SampleDistance dkind, Aggregation akind);

}  // namespace semback::distances
