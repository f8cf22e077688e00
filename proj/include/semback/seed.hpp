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
#include <string>
#include <string_view>

namespace semback {

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Derived seed for a (role, index) stream under a master seed. Every stochastic
/// component takes its seed through this function so that a single master seed
/// fixes a whole experiment.
std::uint64_t derive_seed(std::uint64_t master, std::string_view role, std::uint64_t index = 0) noexcept;

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t state = 0xcbf29ce484222325ULL) noexcept;

std::string hex64(std::uint64_t value);

}  // namespace semback
