// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <stdexcept>
#include <string>

namespace grassq {

// Error classes. Every exception thrown by the library derives from
// std::runtime_error or std::invalid_argument; error_class() returns the
// stable machine-readable name the CLI prints.

class NumericalFailure : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A recursion step whose SQBC normalization is rank deficient.
class DegenerateStep : public NumericalFailure {
  public:
    using NumericalFailure::NumericalFailure;
};

class CapacityExceeded : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

class NeedsCalibration : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Unreadable, truncated, or version-mismatched file.
class FormatError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A network file bound to a different codebook than the one in use.
class BindingMismatch : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class TrainingFailure : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

class IoError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

inline std::string error_class(const std::exception& e)
{
    if (dynamic_cast<const DegenerateStep*>(&e)) return "degenerate-step";
    if (dynamic_cast<const NumericalFailure*>(&e)) return "numerical-failure";
    if (dynamic_cast<const CapacityExceeded*>(&e)) return "capacity-exceeded";
    if (dynamic_cast<const ConfigError*>(&e)) return "config-error";
    if (dynamic_cast<const NeedsCalibration*>(&e)) return "needs-calibration";
    if (dynamic_cast<const FormatError*>(&e)) return "format-error";
    if (dynamic_cast<const BindingMismatch*>(&e)) return "binding-mismatch";
    if (dynamic_cast<const TrainingFailure*>(&e)) return "training-failure";
    if (dynamic_cast<const IoError*>(&e)) return "io-error";
    if (dynamic_cast<const std::invalid_argument*>(&e)) return "invalid-argument";
    return "internal-error";
}

} // namespace grassq
