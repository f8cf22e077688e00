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
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace semback::data {

/// Row-major n x d matrix of inputs.
class Samples {
 public:
  Samples() = default;
  explicit Samples(std::size_t dim) : dim_(dim) {}
  Samples(std::size_t dim, std::vector<double> values);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return dim_ == 0 ? 0 : values_.size() / dim_; }
  bool empty() const noexcept { return size() == 0; }

  std::span<const double> row(std::size_t i) const noexcept {
    return std::span<const double>(values_).subspan(i * dim_, dim_);
  }
  std::span<double> row(std::size_t i) noexcept {
    return std::span<double>(values_).subspan(i * dim_, dim_);
  }
  void push_back(std::span<const double> x);
  void reserve(std::size_t rows) { values_.reserve(rows * dim_); }

  std::span<const double> values() const noexcept { return values_; }

  bool operator==(const Samples&) const = default;

 private:
  std::size_t dim_ = 0;
  std::vector<double> values_;
};

enum class Split { Train, Val, Test };

const char* split_name(Split split) noexcept;
Split parse_split(const std::string& name);

/// Labeled examples. Backdoor examples carry their OOD source id; clean ones
/// carry -1. Labels are 0-based.
struct Dataset {
  std::size_t classes = 0;
  Split split = Split::Train;
  Samples inputs;
  std::vector<std::size_t> labels;
  std::vector<std::uint8_t> backdoor;
  std::vector<int> ood_source;
  /// Set when the dataset contains a single-target backdoor subset.
  std::optional<std::size_t> target;

  Dataset() = default;
  Dataset(std::size_t dim, std::size_t classes, Split split)
      : classes(classes), split(split), inputs(dim) {}

  std::size_t dim() const noexcept { return inputs.dim(); }
  std::size_t size() const noexcept { return labels.size(); }
  bool empty() const noexcept { return labels.empty(); }
  std::span<const double> input(std::size_t i) const noexcept { return inputs.row(i); }
  bool is_backdoor(std::size_t i) const noexcept { return backdoor[i] != 0; }

  void push_back(std::span<const double> x, std::size_t label, bool is_backdoor = false,
                 int source = -1);
  std::size_t backdoor_count() const noexcept;

  bool operator==(const Dataset&) const = default;
};

/// Text table: a header line `# semback-dataset dim=<d> classes=<k>`, a column
/// line, then one row per example `split,label,backdoor,ood_source,x0,...`.
/// Numbers use the shortest round-trip representation.
void write_dataset(std::ostream& out, const Dataset& dataset);
void write_datasets(std::ostream& out, std::span<const Dataset* const> datasets);
/// Reads every row of a table; rows are grouped by their split column.
std::vector<Dataset> read_datasets(std::istream& in);

std::string format_double(double value);
double parse_double(std::string_view text);
/// Splits one comma-separated line; fields are views into `line`.
std::vector<std::string_view> split_fields(std::string_view line);

}  // namespace semback::data
