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

#include <filesystem>
#include <iosfwd>

#include "semback/nn/model.hpp"

namespace semback::nn {

/// Text format: a `semback-model 1` line, topology lines, seed and recipe
/// fingerprint, then one parameter per line in shortest round-trip form.
/// Reading back reproduces the parameters bit for bit.
void write_model(std::ostream& out, const Model& model);
Model read_model(std::istream& in);

void save_model(const std::filesystem::path& path, const Model& model);
Model load_model(const std::filesystem::path& path);

}  // namespace semback::nn
