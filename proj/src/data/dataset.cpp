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

#include "semback/data/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "semback/error.hpp"

namespace semback::data {

Samples::Samples(std::size_t dim, std::vector<double> values) : dim_(dim), values_(std::move(values)) {
  if (dim_ == 0 || values_.size() % dim_ != 0)
    throw ShapeError("samples: value count is not a multiple of the dimension");
}

void Samples::push_back(std::span<const double> x) {
  if (x.size() != dim_) throw ShapeError("samples: row has the wrong dimension");
  values_.insert(values_.end(), x.begin(), x.end());
}

const char* split_name(Split split) noexcept {
  switch (split) {
    case Split::Train:
      return "train";
    case Split::Val:
      return "val";
    case Split::Test:
      return "test";
  }
  return "train";
}

Split parse_split(const std::string& name) {
  if (name == "train") return Split::Train;
  if (name == "val") return Split::Val;
  if (name == "test") return Split::Test;
  throw IoError("unknown split '" + name + "'");
}

void Dataset::push_back(std::span<const double> x, std::size_t label, bool is_backdoor,
                        int source) {
  if (label >= classes) throw LabelError("dataset: label " + std::to_string(label) + " out of range");
  inputs.push_back(x);
  labels.push_back(label);
  backdoor.push_back(is_backdoor ? 1 : 0);
  ood_source.push_back(source);
}

std::size_t Dataset::backdoor_count() const noexcept {
  return static_cast<std::size_t>(std::count(backdoor.begin(), backdoor.end(), std::uint8_t{1}));
}

std::string format_double(double value) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  double value = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw IoError("cannot parse number '" + std::string(text) + "'");
  return value;
}

namespace {

void write_header(std::ostream& out, std::size_t dim, std::size_t classes) {
  out << "# semback-dataset dim=" << dim << " classes=" << classes << "\n";
  out << "split,label,backdoor,ood_source";
  for (std::size_t j = 0; j < dim; ++j) out << ",x" << j;
  out << "\n";
}

void write_rows(std::ostream& out, const Dataset& d) {
  for (std::size_t i = 0; i < d.size(); ++i) {
    out << split_name(d.split) << ',' << d.labels[i] << ',' << int(d.backdoor[i]) << ','
        << d.ood_source[i];
    for (const double v : d.input(i)) out << ',' << format_double(v);
    out << '\n';
  }
}

}  // namespace

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

void write_dataset(std::ostream& out, const Dataset& dataset) {
  write_header(out, dataset.dim(), dataset.classes);
  write_rows(out, dataset);
}

void write_datasets(std::ostream& out, std::span<const Dataset* const> datasets) {
  if (datasets.empty()) return;
  write_header(out, datasets.front()->dim(), datasets.front()->classes);
  for (const auto* d : datasets) write_rows(out, *d);
}

std::vector<Dataset> read_datasets(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("dataset: empty input");
  std::size_t dim = 0, classes = 0;
  {
    std::istringstream header(line);
    std::string hash, tag, dim_field, classes_field;
    header >> hash >> tag >> dim_field >> classes_field;
    if (hash != "#" || tag != "semback-dataset" || dim_field.rfind("dim=", 0) != 0 ||
        classes_field.rfind("classes=", 0) != 0)
      throw IoError("dataset: bad header '" + line + "'");
    dim = std::stoul(dim_field.substr(4));
    classes = std::stoul(classes_field.substr(8));
  }
  if (!std::getline(in, line)) throw IoError("dataset: missing column line");
  std::map<Split, Dataset> by_split;
  std::vector<Split> order;
  std::vector<double> x(dim);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != 4 + dim) throw IoError("dataset: row has the wrong number of fields");
    const Split split = parse_split(std::string(fields[0]));
    auto it = by_split.find(split);
    if (it == by_split.end()) {
      it = by_split.emplace(split, Dataset(dim, classes, split)).first;
      order.push_back(split);
    }
    for (std::size_t j = 0; j < dim; ++j) x[j] = parse_double(fields[4 + j]);
    const auto label = static_cast<std::size_t>(parse_double(fields[1]));
    const bool bd = fields[2] == "1";
    const int source = static_cast<int>(parse_double(fields[3]));
    it->second.push_back(x, label, bd, source);
  }
  std::vector<Dataset> result;
  for (const Split s : order) result.push_back(std::move(by_split.at(s)));
  return result;
}

}  // namespace semback::data
