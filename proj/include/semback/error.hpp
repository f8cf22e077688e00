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

#include <stdexcept>
#include <string>

namespace semback {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad configuration or command-line usage. Maps to exit code 1.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Input or parameter dimensions do not fit the model topology.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Label outside {0, ..., k-1}.
class LabelError : public Error {
 public:
  using Error::Error;
};

/// Non-finite parameters, losses or objectives.
class NumericError : public Error {
 public:
  using Error::Error;
};

class TrainingDiverged : public NumericError {
 public:
  explicit TrainingDiverged(int epoch)
      : NumericError("training diverged (non-finite loss) in epoch " + std::to_string(epoch)),
        epoch_(epoch) {}
  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

/// The inversion retry budget for one class ran out.
class GenerationExhausted : public NumericError {
 public:
  explicit GenerationExhausted(int label)
      : NumericError("inverted sample generation exhausted its retries for class " +
                     std::to_string(label)),
        label_(label) {}
  int label() const noexcept { return label_; }

 private:
  int label_;
};

/// Synthetic task generation and poisoning failures (placement, empty backdoor,
/// insufficient or infeasible OOD assignment).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Pool too small for scoring or calibration, or empty score lists.
class PoolError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace semback
