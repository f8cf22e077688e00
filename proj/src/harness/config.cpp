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

#include "semback/harness/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "semback/error.hpp"
#include "semback/seed.hpp"

namespace semback::harness {

using nlohmann::json;

std::string PoolSpec::name() const {
  std::ostringstream s;
  if (lineage != "pool") s << lineage << '-';
  if (alpha) s << "adaptive-a" << data::format_double(*alpha) << '-';
  if (epsilon) s << "robust-eps" << data::format_double(*epsilon);
  else s << "plain";
  return s.str();
}

std::uint64_t ExperimentConfig::master_seed() const {
  if (!seed) throw ConfigError("a master seed is required (--seed or \"seed\" in the config)");
  return *seed;
}

void ExperimentConfig::validate() const {
  task.validate();
  nn::TrainRecipe r = recipe;
  r.adversarial.reset();
  r.validate();
  if (!(adversarial_step_fraction > 0.0)) throw ConfigError("adversarial step fraction must be positive");
  if (adversarial_steps < 1) throw ConfigError("adversarial steps must be >= 1");
  for (const auto& e : epsilons)
    if (e && !(*e > 0.0)) throw ConfigError("robustness levels must be positive");
  if (adaptive_epsilon && !(*adaptive_epsilon > 0.0)) throw ConfigError("adaptive epsilon must be positive");
  if (study_epsilon && !(*study_epsilon > 0.0)) throw ConfigError("pool-size study epsilon must be positive");
  if (pool_size < 2) throw ConfigError("pool size must be >= 2");
  if (set_kinds.empty() || distances.empty() || aggregations.empty())
    throw ConfigError("set kinds, distances and aggregations must be non-empty");
  for (const double a : alphas)
    if (!(a >= 0.0 && a <= 1.0)) throw ConfigError("alphas must lie in [0,1]");
  for (const double f : asr_floors)
    if (!(f >= 0.0 && f <= 1.0)) throw ConfigError("ASR floors must lie in [0,1]");
  inversion.validate();
  if (!(robust_eval_epsilon >= 0.0)) throw ConfigError("robust evaluation epsilon must be >= 0");
  if (resamples < 1) throw ConfigError("resamples must be >= 1");
  if (test_pool_size < 1 || big_pool_size < 2) throw ConfigError("pool-size study pools are too small");
}

nn::TrainRecipe ExperimentConfig::recipe_for(std::optional<double> epsilon, std::uint64_t model_seed) const {
  nn::TrainRecipe r = recipe;
  r.seed = model_seed;
  r.adversarial.reset();
  if (epsilon) r.adversarial = nn::AdversarialTraining{*epsilon, *epsilon * adversarial_step_fraction, adversarial_steps};
  return r;
}

data::TaskSpec ExperimentConfig::task_spec() const {
  data::TaskSpec t = task;
  t.seed = derive_seed(master_seed(), "task");
  return t;
}

distances::TestSetConfig ExperimentConfig::test_set_config(std::uint64_t model_fingerprint) const {
  distances::TestSetConfig c;
  c.inversion = inversion;
  c.inversion.seed = derive_seed(master_seed() ^ model_fingerprint, "inversion");
  c.random_seed = derive_seed(master_seed(), "random-set");
  return c;
}

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

template <typename E, typename F>
json names(const std::vector<E>& values, F&& fn) {
  json a = json::array();
  for (const auto v : values) a.push_back(fn(v));
  return a;
}

const char* optimizer_name(nn::OptimizerKind k) { return k == nn::OptimizerKind::Adam ? "adam" : "sgd"; }

nn::OptimizerKind parse_optimizer(const std::string& s) {
  if (s == "adam") return nn::OptimizerKind::Adam;
  if (s == "sgd") return nn::OptimizerKind::SgdMomentum;
  throw ConfigError("unknown optimizer '" + s + "'");
}

// Reads keys of one object and rejects the ones nobody asked for.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError("config: '" + path_ + "' must be an object");
  }
  void done() const {
    for (const auto& [key, value] : j_.items())
      if (!used_.count(key)) throw ConfigError("config: unknown key '" + path_ + key + "'");
  }

  template <typename T>
  void get(const char* key, T& out) {
    used_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError("config: bad value for '" + path_ + key + "': " + e.what());
    }
  }
  const json* find(const char* key) {
    used_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }
  std::string path(const char* key) const { return path_ + key + "."; }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

template <typename E, typename P>
void get_kinds(Section& s, const char* key, std::vector<E>& out, P&& parse) {
  std::vector<std::string> names;
  s.get(key, names);
  if (!s.find(key)) return;
  out.clear();
  for (const auto& n : names) out.push_back(parse(n));
}

void get_optional(Section& s, const char* key, std::optional<double>& out) {
  if (const json* v = s.find(key)) {
    if (v->is_null()) out.reset();
    else if (v->is_number()) out = v->get<double>();
    else throw ConfigError(std::string("config: '") + key + "' must be a number or null");
  }
}

}  // namespace

json to_json(const ExperimentConfig& c) {
  json j;
  j["task"] = {{"dim", c.task.dim},
               {"classes", c.task.classes},
               {"ood_classes", c.task.ood_classes},
               {"train_per_class", c.task.train_per_class},
               {"val_per_class", c.task.val_per_class},
               {"test_per_class", c.task.test_per_class},
               {"spread", c.task.spread},
               {"min_separation", c.task.min_separation},
               {"center_margin", c.task.center_margin}};
  j["recipe"] = {{"hidden", c.recipe.hidden},
                 {"optimizer", optimizer_name(c.recipe.optimizer)},
                 {"learning_rate", c.recipe.learning_rate},
                 {"momentum", c.recipe.momentum},
                 {"weight_decay", c.recipe.weight_decay},
                 {"batch_size", c.recipe.batch_size},
                 {"max_epochs", c.recipe.max_epochs},
                 {"patience", c.recipe.patience},
                 {"cosine_annealing", c.recipe.cosine_annealing}};
  j["adversarial_training"] = {{"step_fraction", c.adversarial_step_fraction}, {"steps", c.adversarial_steps}};
  json eps = json::array();
  for (const auto& e : c.epsilons) eps.push_back(optional_number(e));
  j["epsilons"] = eps;
  j["pool_size"] = c.pool_size;
  j["set_kinds"] = names(c.set_kinds, [](auto v) { return distances::name(v); });
  j["distances"] = names(c.distances, [](auto v) { return distances::name(v); });
  j["aggregations"] = names(c.aggregations, [](auto v) { return distances::name(v); });
  j["alphas"] = c.alphas;
  j["asr_floors"] = c.asr_floors;
  j["adaptive_epsilon"] = optional_number(c.adaptive_epsilon);
  j["matrix"] = {{"set", distances::name(c.matrix_set)},
                 {"distance", distances::name(c.matrix_distance)},
                 {"aggregation", distances::name(c.matrix_aggregation)}};
  const auto& inv = c.inversion;
  j["inversion"] = {{"gamma", inv.gamma},
                    {"feature_iterations", inv.feature_iterations},
                    {"feature_learning_rate", inv.feature_learning_rate},
                    {"feature_init_noise", inv.feature_init_noise},
                    {"prior_iterations", inv.prior_iterations},
                    {"prior_learning_rate", inv.prior_learning_rate},
                    {"per_class", inv.per_class},
                    {"confidence_floor", inv.confidence_floor},
                    {"max_attempts", inv.max_attempts},
                    {"generator_seed_dim", inv.generator_seed_dim},
                    {"generator_hidden", inv.generator_hidden},
                    {"start_at_reference", inv.start_at_reference},
                    {"generator_output_scale", inv.generator_output_scale}};
  j["robust_eval_epsilon"] = c.robust_eval_epsilon;
  j["pool_size_study"] = {{"epsilon", optional_number(c.study_epsilon)},
                          {"big_pool_size", c.big_pool_size},
                          {"test_pool_size", c.test_pool_size},
                          {"m_values", c.m_values},
                          {"resamples", c.resamples}};
  j["seed"] = c.seed ? json(*c.seed) : json(nullptr);
  j["output_dir"] = c.output_dir.string();
  return j;
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  Section root(j, "");
  if (const json* t = root.find("task")) {
    Section s(*t, "task.");
    s.get("dim", c.task.dim);
    s.get("classes", c.task.classes);
    s.get("ood_classes", c.task.ood_classes);
    s.get("train_per_class", c.task.train_per_class);
    s.get("val_per_class", c.task.val_per_class);
    s.get("test_per_class", c.task.test_per_class);
    s.get("spread", c.task.spread);
    s.get("min_separation", c.task.min_separation);
    s.get("center_margin", c.task.center_margin);
    s.done();
  }
  if (const json* r = root.find("recipe")) {
    Section s(*r, "recipe.");
    s.get("hidden", c.recipe.hidden);
    std::string opt = optimizer_name(c.recipe.optimizer);
    s.get("optimizer", opt);
    c.recipe.optimizer = parse_optimizer(opt);
    s.get("learning_rate", c.recipe.learning_rate);
    s.get("momentum", c.recipe.momentum);
    s.get("weight_decay", c.recipe.weight_decay);
    s.get("batch_size", c.recipe.batch_size);
    s.get("max_epochs", c.recipe.max_epochs);
    s.get("patience", c.recipe.patience);
    s.get("cosine_annealing", c.recipe.cosine_annealing);
    s.done();
  }
  if (const json* a = root.find("adversarial_training")) {
    Section s(*a, "adversarial_training.");
    s.get("step_fraction", c.adversarial_step_fraction);
    s.get("steps", c.adversarial_steps);
    s.done();
  }
  if (const json* e = root.find("epsilons")) {
    if (!e->is_array()) throw ConfigError("config: 'epsilons' must be an array");
    c.epsilons.clear();
    for (const auto& v : *e) {
      if (v.is_null()) c.epsilons.emplace_back();
      else if (v.is_number()) c.epsilons.emplace_back(v.get<double>());
      else throw ConfigError("config: 'epsilons' entries must be numbers or null");
    }
  }
  root.get("pool_size", c.pool_size);
  get_kinds(root, "set_kinds", c.set_kinds, distances::parse_set_kind);
  get_kinds(root, "distances", c.distances, distances::parse_sample_distance);
  get_kinds(root, "aggregations", c.aggregations, distances::parse_aggregation);
  root.get("alphas", c.alphas);
  root.get("asr_floors", c.asr_floors);
  get_optional(root, "adaptive_epsilon", c.adaptive_epsilon);
  if (const json* m = root.find("matrix")) {
    Section s(*m, "matrix.");
    std::string set = distances::name(c.matrix_set), dist = distances::name(c.matrix_distance),
                agg = distances::name(c.matrix_aggregation);
    s.get("set", set);
    s.get("distance", dist);
    s.get("aggregation", agg);
    c.matrix_set = distances::parse_set_kind(set);
    c.matrix_distance = distances::parse_sample_distance(dist);
    c.matrix_aggregation = distances::parse_aggregation(agg);
    s.done();
  }
  if (const json* i = root.find("inversion")) {
    Section s(*i, "inversion.");
    auto& inv = c.inversion;
    s.get("gamma", inv.gamma);
    s.get("feature_iterations", inv.feature_iterations);
    s.get("feature_learning_rate", inv.feature_learning_rate);
    s.get("feature_init_noise", inv.feature_init_noise);
    s.get("prior_iterations", inv.prior_iterations);
    s.get("prior_learning_rate", inv.prior_learning_rate);
    s.get("per_class", inv.per_class);
    s.get("confidence_floor", inv.confidence_floor);
    s.get("max_attempts", inv.max_attempts);
    s.get("generator_seed_dim", inv.generator_seed_dim);
    s.get("generator_hidden", inv.generator_hidden);
    s.get("start_at_reference", inv.start_at_reference);
    s.get("generator_output_scale", inv.generator_output_scale);
    s.done();
  }
  root.get("robust_eval_epsilon", c.robust_eval_epsilon);
  if (const json* p = root.find("pool_size_study")) {
    Section s(*p, "pool_size_study.");
    get_optional(s, "epsilon", c.study_epsilon);
    s.get("big_pool_size", c.big_pool_size);
    s.get("test_pool_size", c.test_pool_size);
    s.get("m_values", c.m_values);
    s.get("resamples", c.resamples);
    s.done();
  }
  if (const json* s = root.find("seed")) {
    if (s->is_null()) c.seed.reset();
    else if (s->is_number_unsigned()) c.seed = s->get<std::uint64_t>();
    else throw ConfigError("config: 'seed' must be a non-negative integer");
  }
  std::string out = c.output_dir.string();
  root.get("output_dir", out);
  c.output_dir = out;
  root.done();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config file " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

std::uint64_t ExperimentConfig::fingerprint() const {
  json j = to_json(*this);
  j.erase("output_dir");
  return fnv1a(j.dump());
}

}  // namespace semback::harness
