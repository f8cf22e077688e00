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

#include "semback/nn/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <random>
#include <string>

#include "semback/error.hpp"
#include "semback/seed.hpp"
#include "semback/simd/kernels.hpp"

namespace semback::nn {

const char* activation_name(Activation activation) noexcept {
  switch (activation) {
    case Activation::Identity:
      return "identity";
    case Activation::Relu:
      return "relu";
    case Activation::Sigmoid:
      return "sigmoid";
  }
  return "identity";
}

Activation parse_activation(const char* name) {
  const std::string s(name);
  if (s == "identity") return Activation::Identity;
  if (s == "relu") return Activation::Relu;
  if (s == "sigmoid") return Activation::Sigmoid;
  throw ConfigError("unknown activation '" + s + "'");
}

std::size_t Topology::layer_inputs(std::size_t layer) const noexcept {
  return layer == 0 ? input_dim : hidden[layer - 1];
}

std::size_t Topology::layer_outputs(std::size_t layer) const noexcept {
  return layer == hidden.size() ? output_dim : hidden[layer];
}

Activation Topology::activation(std::size_t layer) const noexcept {
  return layer == hidden.size() ? output_activation : hidden_activation;
}

std::size_t Topology::feature_dim() const noexcept {
  return hidden.empty() ? input_dim : hidden.back();
}

std::size_t Topology::parameter_count() const noexcept {
  std::size_t count = 0;
  for (std::size_t l = 0; l < layer_count(); ++l)
    count += layer_outputs(l) * (layer_inputs(l) + 1);
  return count;
}

void Topology::validate() const {
  if (input_dim == 0) throw ShapeError("topology: input dimension must be positive");
  if (output_dim == 0) throw ShapeError("topology: output dimension must be positive");
  for (const auto width : hidden)
    if (width == 0) throw ShapeError("topology: hidden layer width must be positive");
}

Topology classifier_topology(std::size_t input_dim, std::vector<std::size_t> hidden,
                             std::size_t classes) {
  Topology t;
  t.input_dim = input_dim;
  t.hidden = std::move(hidden);
  t.output_dim = classes;
  t.hidden_activation = Activation::Relu;
  t.output_activation = Activation::Identity;
  return t;
}

Model::Model(Topology topology, std::vector<double> parameters, std::uint64_t seed)
    : topology_(std::move(topology)), params_(std::move(parameters)), seed_(seed) {
  topology_.validate();
  if (params_.size() != topology_.parameter_count())
    throw ShapeError("model: expected " + std::to_string(topology_.parameter_count()) +
                     " parameters, got " + std::to_string(params_.size()));
  offsets_.resize(topology_.layer_count());
  std::size_t offset = 0;
  for (std::size_t l = 0; l < topology_.layer_count(); ++l) {
    offsets_[l] = offset;
    offset += topology_.layer_outputs(l) * (topology_.layer_inputs(l) + 1);
  }
}

Model Model::initialize(Topology topology, std::uint64_t seed) {
  topology.validate();
  std::vector<double> params(topology.parameter_count(), 0.0);
  std::mt19937_64 rng(derive_seed(seed, "init"));
  std::size_t offset = 0;
  for (std::size_t l = 0; l < topology.layer_count(); ++l) {
    const std::size_t fan_in = topology.layer_inputs(l);
    const std::size_t fan_out = topology.layer_outputs(l);
    const double gain = topology.activation(l) == Activation::Relu ? 2.0 : 1.0;
    std::normal_distribution<double> normal(0.0, std::sqrt(gain / static_cast<double>(fan_in)));
    for (std::size_t i = 0; i < fan_in * fan_out; ++i) params[offset + i] = normal(rng);
    offset += fan_out * (fan_in + 1);
  }
  return Model(std::move(topology), std::move(params), seed);
}

Model Model::zeros(Topology topology) {
  const std::size_t n = topology.parameter_count();
  return Model(std::move(topology), std::vector<double>(n, 0.0), 0);
}

std::size_t Model::bias_offset(std::size_t layer) const noexcept {
  return offsets_[layer] + topology_.layer_outputs(layer) * topology_.layer_inputs(layer);
}

std::span<const double> Model::weights(std::size_t layer) const noexcept {
  return std::span<const double>(params_).subspan(
      offsets_[layer], topology_.layer_outputs(layer) * topology_.layer_inputs(layer));
}

std::span<const double> Model::biases(std::size_t layer) const noexcept {
  return std::span<const double>(params_).subspan(bias_offset(layer),
                                                  topology_.layer_outputs(layer));
}

std::span<double> Model::weights(std::size_t layer) noexcept {
  return std::span<double>(params_).subspan(
      offsets_[layer], topology_.layer_outputs(layer) * topology_.layer_inputs(layer));
}

std::span<double> Model::biases(std::size_t layer) noexcept {
  return std::span<double>(params_).subspan(bias_offset(layer), topology_.layer_outputs(layer));
}

bool Model::all_finite() const noexcept {
  return std::all_of(params_.begin(), params_.end(), [](double v) { return std::isfinite(v); });
}

std::uint64_t Model::fingerprint() const {
  std::string bytes;
  bytes.reserve(64 + params_.size() * 8);
  auto put = [&bytes](std::uint64_t v) {
    char buf[8];
    std::memcpy(buf, &v, 8);
    bytes.append(buf, 8);
  };
  put(topology_.input_dim);
  put(topology_.hidden.size());
  for (const auto w : topology_.hidden) put(w);
  put(topology_.output_dim);
  put(static_cast<std::uint64_t>(topology_.hidden_activation));
  put(static_cast<std::uint64_t>(topology_.output_activation));
  for (const double p : params_) put(std::bit_cast<std::uint64_t>(p));
  return fnv1a(bytes);
}

namespace {

inline double activate(Activation a, double v) noexcept {
  switch (a) {
    case Activation::Relu:
      return v > 0.0 ? v : 0.0;
    case Activation::Sigmoid:
      return v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
    case Activation::Identity:
      break;
  }
  return v;
}

inline double activation_slope(Activation a, double pre, double post) noexcept {
  switch (a) {
    case Activation::Relu:
      return pre > 0.0 ? 1.0 : 0.0;
    case Activation::Sigmoid:
      return post * (1.0 - post);
    case Activation::Identity:
      break;
  }
  return 1.0;
}

}  // namespace

void forward(const Model& model, std::span<const double> x, Trace& trace) {
  const Topology& t = model.topology();
  const std::size_t layers = t.layer_count();
  trace.pre.resize(layers);
  trace.post.resize(layers + 1);
  trace.post[0].assign(x.begin(), x.end());
  const auto& k = simd::kernels();
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t rows = t.layer_outputs(l);
    const std::size_t cols = t.layer_inputs(l);
    auto& pre = trace.pre[l];
    auto& post = trace.post[l + 1];
    pre.resize(rows);
    post.resize(rows);
    k.affine(model.weights(l).data(), model.biases(l).data(), trace.post[l].data(), pre.data(),
             rows, cols);
    const Activation a = t.activation(l);
    for (std::size_t r = 0; r < rows; ++r) post[r] = activate(a, pre[r]);
  }
}

void backward(const Model& model, const Trace& trace, std::span<const double> d_output,
              std::span<const double> d_features, std::span<double> param_grad,
              std::span<double> input_grad, Workspace& ws) {
  const Topology& t = model.topology();
  const std::size_t layers = t.layer_count();
  const auto& k = simd::kernels();
  ws.delta_prev.assign(d_output.begin(), d_output.end());
  for (std::size_t l = layers; l-- > 0;) {
    const std::size_t rows = t.layer_outputs(l);
    const std::size_t cols = t.layer_inputs(l);
    const Activation a = t.activation(l);
    ws.delta.resize(rows);
    for (std::size_t r = 0; r < rows; ++r)
      ws.delta[r] = ws.delta_prev[r] * activation_slope(a, trace.pre[l][r], trace.post[l + 1][r]);
    if (!param_grad.empty()) {
      k.outer_accumulate(1.0, ws.delta.data(), trace.post[l].data(),
                         param_grad.data() + model.weight_offset(l), rows, cols);
      double* gb = param_grad.data() + model.bias_offset(l);
      for (std::size_t r = 0; r < rows; ++r) gb[r] += ws.delta[r];
    }
    const bool need_prev = l > 0 || !input_grad.empty();
    if (!need_prev) break;
    ws.delta_prev.assign(cols, 0.0);
    k.affine_transpose(model.weights(l).data(), ws.delta.data(), ws.delta_prev.data(), rows, cols);
    if (l == layers - 1 && !d_features.empty())
      for (std::size_t c = 0; c < cols; ++c) ws.delta_prev[c] += d_features[c];
  }
  if (!input_grad.empty()) std::copy(ws.delta_prev.begin(), ws.delta_prev.end(), input_grad.begin());
}

double log_sum_exp(std::span<const double> z) noexcept {
  const double shift = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (const double v : z) sum += std::exp(v - shift);
  return shift + std::log(sum);
}

void softmax(std::span<const double> z, std::span<double> out) noexcept {
  const double shift = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    out[i] = std::exp(z[i] - shift);
    sum += out[i];
  }
  for (std::size_t i = 0; i < z.size(); ++i) out[i] /= sum;
}

std::vector<double> softmax(std::span<const double> z) {
  std::vector<double> out(z.size());
  softmax(z, out);
  return out;
}

double cross_entropy_logits(std::span<const double> z, std::size_t label) noexcept {
  return log_sum_exp(z) - z[label];
}

std::size_t argmax(std::span<const double> values) noexcept {
  return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
}

void check_input(const Model& model, std::span<const double> x) {
  if (x.size() != model.input_dim())
    throw ShapeError("input has dimension " + std::to_string(x.size()) + ", model expects " +
                     std::to_string(model.input_dim()));
}

void check_label(const Model& model, std::size_t label) {
  if (label >= model.output_dim())
    throw LabelError("label " + std::to_string(label) + " outside [0, " +
                     std::to_string(model.output_dim()) + ")");
}

namespace {

void check_forward(const Model& model, std::span<const double> x) {
  check_input(model, x);
  if (!model.all_finite()) throw NumericError("model has non-finite parameters");
}

}  // namespace

Output forward(const Model& model, std::span<const double> x) {
  check_forward(model, x);
  Trace trace;
  forward(model, x, trace);
  Output out;
  out.logits.assign(trace.output().begin(), trace.output().end());
  out.features.assign(trace.features().begin(), trace.features().end());
  out.probs = softmax(out.logits);
  return out;
}

std::size_t predict(const Model& model, std::span<const double> x) {
  check_forward(model, x);
  Trace trace;
  forward(model, x, trace);
  return argmax(trace.output());
}

double loss(const Model& model, std::span<const double> x, std::size_t label) {
  check_forward(model, x);
  check_label(model, label);
  Trace trace;
  forward(model, x, trace);
  return cross_entropy_logits(trace.output(), label);
}

std::vector<double> grad(const Model& model, std::span<const double> x, std::size_t label,
                         Wrt wrt) {
  check_forward(model, x);
  check_label(model, label);
  Trace trace;
  forward(model, x, trace);
  std::vector<double> dz = softmax(trace.output());
  dz[label] -= 1.0;
  Workspace ws;
  if (wrt == Wrt::Parameters) {
    std::vector<double> g(model.parameters().size(), 0.0);
    backward(model, trace, dz, {}, g, {}, ws);
    return g;
  }
  std::vector<double> g(model.input_dim(), 0.0);
  backward(model, trace, dz, {}, {}, g, ws);
  return g;
}

}  // namespace semback::nn
