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

#include "semback/distances/distances.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "semback/error.hpp"
#include "semback/simd/kernels.hpp"

namespace semback::distances {

const char* name(SampleDistance kind) noexcept {
  switch (kind) {
    case SampleDistance::CE:
      return "CE";
    case SampleDistance::KL:
      return "KL";
    case SampleDistance::Cos:
      return "Cos";
    case SampleDistance::CosL:
      return "CosL";
    case SampleDistance::Label:
      return "Label";
  }
  return "CE";
}

const char* name(Aggregation kind) noexcept {
  switch (kind) {
    case Aggregation::Avg:
      return "avg";
    case Aggregation::Med:
      return "med";
    case Aggregation::Std:
      return "std";
    case Aggregation::Max:
      return "max";
  }
  return "avg";
}

SampleDistance parse_sample_distance(const std::string& text) {
  for (const auto k : kAllSampleDistances)
    if (text == name(k)) return k;
  throw ConfigError("unknown sample distance '" + text + "'");
}

Aggregation parse_aggregation(const std::string& text) {
  for (const auto k : kAllAggregations)
    if (text == name(k)) return k;
  throw ConfigError("unknown aggregation '" + text + "'");
}

double cross_entropy(std::span<const double> p, std::span<const double> q) noexcept {
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] != 0.0) sum -= p[i] * std::log(std::clamp(q[i], kProbabilityFloor, 1.0));
  return sum;
}

double kl_divergence(std::span<const double> p, std::span<const double> q) noexcept {
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    const double pi = std::clamp(p[i], kProbabilityFloor, 1.0);
    const double qi = std::clamp(q[i], kProbabilityFloor, 1.0);
    sum += p[i] * (std::log(pi) - std::log(qi));
  }
  return sum;
}

double cosine_distance(std::span<const double> a, std::span<const double> b) noexcept {
  const double na = std::sqrt(simd::dot(a, a));
  const double nb = std::sqrt(simd::dot(b, b));
  if (na == 0.0 || nb == 0.0) return (na == 0.0 && nb == 0.0) ? 0.0 : 1.0;
  return std::clamp(1.0 - simd::dot(a, b) / (na * nb), 0.0, 2.0);
}

void accumulate_cosine_distance_grad(std::span<const double> a, std::span<const double> b,
                                     double weight, std::span<double> grad) noexcept {
  const double na = std::sqrt(simd::dot(a, a));
  const double nb = std::sqrt(simd::dot(b, b));
  if (na == 0.0 || nb == 0.0) return;
  const double ab = simd::dot(a, b);
  const double inv = 1.0 / (na * nb);
  const double cross = ab * inv / (nb * nb);
  for (std::size_t i = 0; i < b.size(); ++i) grad[i] -= weight * (a[i] * inv - cross * b[i]);
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) noexcept {
  constexpr double eps = 1e-12;
  const double na = std::sqrt(simd::dot(a, a)) + eps;
  const double nb = std::sqrt(simd::dot(b, b)) + eps;
  return simd::dot(a, b) / (na * nb);
}

void accumulate_cosine_similarity_grad(std::span<const double> a, std::span<const double> b,
                                       double weight, std::span<double> grad) noexcept {
  constexpr double eps = 1e-12;
  const double raw_nb = std::sqrt(simd::dot(b, b));
  const double na = std::sqrt(simd::dot(a, a)) + eps;
  const double nb = raw_nb + eps;
  const double ab = simd::dot(a, b);
  const double inv = 1.0 / (na * nb);
  const double cross = raw_nb > 0.0 ? ab * inv / (nb * raw_nb) : 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) grad[i] += weight * (a[i] * inv - cross * b[i]);
}

Evaluation evaluate(const nn::Model& model, const data::Samples& inputs) {
  if (inputs.dim() != model.input_dim() && !inputs.empty())
    throw ShapeError("evaluate: input dimension does not match the model");
  if (!model.all_finite()) throw NumericError("evaluate: model has non-finite parameters");
  Evaluation ev;
  const std::size_t k = model.output_dim();
  ev.classes = k;
  ev.logits.resize(inputs.size() * k);
  ev.probs.resize(inputs.size() * k);
  ev.labels.resize(inputs.size());
  nn::Trace trace;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    nn::forward(model, inputs.row(i), trace);
    const auto z = trace.output();
    std::copy(z.begin(), z.end(), ev.logits.begin() + static_cast<std::ptrdiff_t>(i * k));
    nn::softmax(z, std::span<double>(ev.probs).subspan(i * k, k));
    ev.labels[i] = nn::argmax(z);
  }
  return ev;
}

double sample_distance(SampleDistance kind, const Evaluation& first, const Evaluation& second,
                       std::size_t i) noexcept {
  switch (kind) {
    case SampleDistance::CE:
      return cross_entropy(first.prob(i), second.prob(i));
    case SampleDistance::KL:
      return kl_divergence(first.prob(i), second.prob(i));
    case SampleDistance::Cos:
      return cosine_distance(first.prob(i), second.prob(i));
    case SampleDistance::CosL:
      return cosine_distance(first.logit(i), second.logit(i));
    case SampleDistance::Label:
      return first.labels[i] != second.labels[i] ? 1.0 : 0.0;
  }
  return 0.0;
}

namespace {

void check_pair(const nn::Model& first, const nn::Model& second) {
  if (first.output_dim() != second.output_dim() || first.input_dim() != second.input_dim())
    throw ShapeError("model distance: models have different input or output arity");
}

}  // namespace

double sample_distance(SampleDistance kind, const nn::Model& first, const nn::Model& second,
                       std::span<const double> x) {
  check_pair(first, second);
  data::Samples one(x.size());
  one.push_back(x);
  return sample_distance(kind, evaluate(first, one), evaluate(second, one), 0);
}

std::vector<double> sample_distances(SampleDistance kind, const Evaluation& first,
                                     const Evaluation& second) {
  if (first.size() != second.size() || first.classes != second.classes)
    throw ShapeError("sample distances: evaluations differ in shape");
  std::vector<double> out(first.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = sample_distance(kind, first, second, i);
  return out;
}

double aggregate(std::span<const double> values, Aggregation kind) {
  if (values.empty()) throw Error("aggregate: empty value list");
  const auto n = static_cast<double>(values.size());
  switch (kind) {
    case Aggregation::Avg:
      return std::accumulate(values.begin(), values.end(), 0.0) / n;
    case Aggregation::Max:
      return *std::max_element(values.begin(), values.end());
    case Aggregation::Med: {
      std::vector<double> v(values.begin(), values.end());
      std::sort(v.begin(), v.end());
      const std::size_t h = v.size() / 2;
      return v.size() % 2 == 1 ? v[h] : (v[h - 1] + v[h]) / 2.0;
    }
    case Aggregation::Std: {
      if (values.size() < 2) return 0.0;
      const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
      double ss = 0.0;
      for (const double v : values) ss += (v - mean) * (v - mean);
      return std::sqrt(ss / (n - 1.0));
    }
  }
  return 0.0;
}

double model_distance(const nn::Model& first, const nn::Model& second, const data::Samples& set,
                      SampleDistance dkind, Aggregation akind) {
  check_pair(first, second);
  if (set.empty()) throw Error("model distance: empty distance test set");
  const auto d = sample_distances(dkind, evaluate(first, set), evaluate(second, set));
  return aggregate(d, akind);
}

}  // namespace semback::distances
