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

// Dense feed-forward network engine with exact reverse-mode gradients.
//
// A classifier is a Model whose output layer is linear: the output is the
// logit vector z(x), the post-activation of the last hidden layer is the
// feature vector h(x), and z = Z(h) is the final affine map. The same engine
// backs the inversion prior generator (sigmoid output layer).

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace semback::nn {

enum class Activation { Identity, Relu, Sigmoid };

const char* activation_name(Activation activation) noexcept;
Activation parse_activation(const char* name);

struct Topology {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden;
  std::size_t output_dim = 0;
  Activation hidden_activation = Activation::Relu;
  Activation output_activation = Activation::Identity;

  std::size_t layer_count() const noexcept { return hidden.size() + 1; }
  std::size_t layer_inputs(std::size_t layer) const noexcept;
  std::size_t layer_outputs(std::size_t layer) const noexcept;
  Activation activation(std::size_t layer) const noexcept;
  /// Width of the layer feeding the output layer.
  std::size_t feature_dim() const noexcept;
  std::size_t parameter_count() const noexcept;
  void validate() const;

  bool operator==(const Topology&) const = default;
};

/// ReLU hidden layers and a linear logit layer with `classes` outputs.
Topology classifier_topology(std::size_t input_dim, std::vector<std::size_t> hidden,
                             std::size_t classes);

class Model {
 public:
  Model() = default;
  Model(Topology topology, std::vector<double> parameters, std::uint64_t seed = 0);

  /// He-normal weights for ReLU layers, variance 1/fan_in otherwise, zero biases.
  static Model initialize(Topology topology, std::uint64_t seed);
  static Model zeros(Topology topology);

  const Topology& topology() const noexcept { return topology_; }
  std::size_t input_dim() const noexcept { return topology_.input_dim; }
  std::size_t output_dim() const noexcept { return topology_.output_dim; }
  std::size_t feature_dim() const noexcept { return topology_.feature_dim(); }

  std::span<const double> parameters() const noexcept { return params_; }
  std::span<double> mutable_parameters() noexcept { return params_; }

  /// Row-major (outputs x inputs) weight block of a layer.
  std::span<const double> weights(std::size_t layer) const noexcept;
  std::span<const double> biases(std::size_t layer) const noexcept;
  std::span<double> weights(std::size_t layer) noexcept;
  std::span<double> biases(std::size_t layer) noexcept;
  std::size_t weight_offset(std::size_t layer) const noexcept { return offsets_[layer]; }
  std::size_t bias_offset(std::size_t layer) const noexcept;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t recipe_fingerprint() const noexcept { return recipe_fingerprint_; }
  void set_recipe_fingerprint(std::uint64_t value) noexcept { recipe_fingerprint_ = value; }

  bool all_finite() const noexcept;
  /// Hash over topology and parameter bits.
  std::uint64_t fingerprint() const;

 private:
  Topology topology_;
  std::vector<double> params_;
  std::vector<std::size_t> offsets_;
  std::uint64_t seed_ = 0;
  std::uint64_t recipe_fingerprint_ = 0;
};

/// Per-layer activations of one forward pass. post[0] is the input and
/// post[l + 1] the output of layer l. Reusable across calls.
struct Trace {
  std::vector<std::vector<double>> pre;
  std::vector<std::vector<double>> post;

  std::span<const double> output() const noexcept { return post.back(); }
  std::span<const double> features() const noexcept { return post[post.size() - 2]; }
};

/// Scratch buffers for backward().
struct Workspace {
  std::vector<double> delta;
  std::vector<double> delta_prev;
};

/// Unchecked forward pass; callers validate shapes.
void forward(const Model& model, std::span<const double> x, Trace& trace);

/// Reverse pass for upstream gradients on the network output (d_output) and,
/// optionally, on the feature layer (d_features, empty to skip). Parameter
/// gradients are accumulated into param_grad, the input gradient overwrites
/// input_grad; either may be empty.
void backward(const Model& model, const Trace& trace, std::span<const double> d_output,
              std::span<const double> d_features, std::span<double> param_grad,
              std::span<double> input_grad, Workspace& workspace);

// Numerically stable softmax family on logit vectors.
double log_sum_exp(std::span<const double> z) noexcept;
void softmax(std::span<const double> z, std::span<double> out) noexcept;
std::vector<double> softmax(std::span<const double> z);
/// -log softmax(z)_label
double cross_entropy_logits(std::span<const double> z, std::size_t label) noexcept;
/// Index of the maximum; the lowest index wins ties.
std::size_t argmax(std::span<const double> values) noexcept;

struct Output {
  std::vector<double> logits;
  std::vector<double> features;
  std::vector<double> probs;
};

/// Checked forward pass of a classifier.
Output forward(const Model& model, std::span<const double> x);
std::size_t predict(const Model& model, std::span<const double> x);
/// Cross-entropy of the softmax output against label.
double loss(const Model& model, std::span<const double> x, std::size_t label);

enum class Wrt { Parameters, Input };

/// Exact gradient of the cross-entropy loss.
std::vector<double> grad(const Model& model, std::span<const double> x, std::size_t label, Wrt wrt);

void check_input(const Model& model, std::span<const double> x);
void check_label(const Model& model, std::size_t label);

}  // namespace semback::nn
