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

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "grassq/channel.hpp"
#include "grassq/quantizer.hpp"

namespace grassq {

enum class Scenario {
    single_stage_memoryless,
    single_stage_selective,
    multistage_full,
    multistage_selective,
    classifier_eval,
    stage_table,
};

std::string_view to_string(Scenario s);
Scenario parse_scenario(std::string_view name);

/// Experiment description. Parsed from a key = value text file whose
/// grammar and keys are listed in docs/config-format.md.
struct ExperimentConfig {
    Scenario scenario = Scenario::multistage_selective;
    Index n = 0;
    Index m = 0;
    int bits = 0; // per stage (multistage scenarios) or total (single-stage)
    std::vector<double> dopplers;
    ChannelModel channel = ChannelModel::gauss_markov;
    std::size_t length = 500;
    std::size_t trajectories = 2000;
    Hysteresis hysteresis{};
    std::uint64_t seed = 1;          // channel and input sampling
    std::uint64_t codebook_seed = 1; // ladder / flat codebook
    bool classifier = false;
    std::string networks;            // directory of stage_XX.net files
    std::string output;              // result CSV path (relative to the output directory)
    std::string trace;               // optional per-instant trace CSV
    std::size_t warmup = 50;         // leading instants dropped from selective statistics
    std::size_t threads = 0;         // 0 = hardware concurrency
    int sinusoids = kDefaultSinusoids;
    std::size_t samples = 10000;            // stage_table / classifier_eval inputs
    std::size_t calibration_samples = 4000; // per constant, when m > 1

    bool is_selective() const noexcept;
    bool is_sweep() const noexcept;
    bool is_multistage() const noexcept;

    /// Throws ConfigError naming the first missing or inconsistent field.
    void validate() const;

    /// Sorted key=value lines covering every field; identical configs give
    /// identical text.
    std::string canonical_text() const;
    /// FNV-1a 64 of canonical_text().
    std::uint64_t hash() const;
};

/// Parses and validates a config. Unknown keys, duplicate keys and
/// malformed values are ConfigErrors that carry the line number.
ExperimentConfig parse_config(std::istream& in, std::string_view source = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

} // namespace grassq
