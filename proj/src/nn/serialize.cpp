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

#include "semback/nn/serialize.hpp"

#include <fstream>
#include <sstream>
#include <string>

#include "semback/data/dataset.hpp"
#include "semback/error.hpp"
#include "semback/seed.hpp"

namespace semback::nn {

namespace {

std::istringstream expect_line(std::istream& in, const std::string& key) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("model: missing '" + key + "' line");
  std::istringstream fields(line);
  std::string got;
  fields >> got;
  if (got != key) throw IoError("model: expected '" + key + "', found '" + line + "'");
  return fields;
}

}  // namespace

void write_model(std::ostream& out, const Model& model) {
  const Topology& t = model.topology();
  out << "semback-model 1\n";
  out << "input_dim " << t.input_dim << "\n";
  out << "hidden";
  for (const auto w : t.hidden) out << ' ' << w;
  out << "\n";
  out << "output_dim " << t.output_dim << "\n";
  out << "activations " << activation_name(t.hidden_activation) << ' '
      << activation_name(t.output_activation) << "\n";
  out << "seed " << model.seed() << "\n";
  out << "recipe " << hex64(model.recipe_fingerprint()) << "\n";
  out << "parameters " << model.parameters().size() << "\n";
  for (const double v : model.parameters()) out << data::format_double(v) << '\n';
}

Model read_model(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "semback-model 1") throw IoError("model: bad header");
  Topology t;
  expect_line(in, "input_dim") >> t.input_dim;
  {
    auto f = expect_line(in, "hidden");
    std::size_t w;
    while (f >> w) t.hidden.push_back(w);
  }
  expect_line(in, "output_dim") >> t.output_dim;
  {
    std::string hidden, output;
    expect_line(in, "activations") >> hidden >> output;
    t.hidden_activation = parse_activation(hidden.c_str());
    t.output_activation = parse_activation(output.c_str());
  }
  std::uint64_t seed = 0;
  expect_line(in, "seed") >> seed;
  std::string recipe;
  expect_line(in, "recipe") >> recipe;
  std::size_t count = 0;
  expect_line(in, "parameters") >> count;
  t.validate();
  if (count != t.parameter_count()) throw IoError("model: parameter count does not match the topology");
  std::vector<double> params(count);
  for (auto& v : params) {
    if (!std::getline(in, line)) throw IoError("model: truncated parameter list");
    v = data::parse_double(line);
  }
  Model model(t, std::move(params), seed);
  model.set_recipe_fingerprint(std::stoull(recipe, nullptr, 16));
  return model;
}

void save_model(const std::filesystem::path& path, const Model& model) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw IoError("cannot write " + tmp);
    write_model(out, model);
    if (!out) throw IoError("write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  return read_model(in);
}

}  // namespace semback::nn
