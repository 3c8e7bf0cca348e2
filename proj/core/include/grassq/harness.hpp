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
#include <string>
#include <vector>

#include "grassq/config.hpp"
#include "grassq/distortion.hpp"
#include "grassq/quantizer.hpp"

namespace grassq {

/// Aggregates for one Doppler point of a sweep.
struct ResultRow {
    double doppler = 0.0;
    std::uint64_t instants = 0; // counted instants (after warm-up)
    double mean_distortion = 0.0;
    double se_distortion = 0.0;
    double mean_bits = 0.0;
    double se_bits = 0.0;
    double mean_updated = 0.0;
    double se_updated = 0.0;
    double update_fraction = 0.0; // instants with at least one updated stage
    std::size_t modal_updated = 0;
    std::uint64_t violations = 0; // no-update instants above c_u * expected
    std::vector<std::uint64_t> histogram; // counts of updated-stage values 0..R
};

struct ResultTable {
    ExperimentConfig config;
    std::uint64_t config_hash = 0;
    std::size_t stage_count = 0;
    int header_bits = 0;
    double expected_distortion = 0.0;
    std::vector<ResultRow> rows; // sorted by doppler
};

/// Per-stage row of a stage table.
struct StageRow {
    std::size_t stage = 0; // 1-based
    Index input_dim = 0;
    double theory = 0.0;
    double exhaustive_mean = 0.0;
    double exhaustive_se = 0.0;
    bool has_classifier = false;
    double classifier_mean = 0.0;
    double classifier_se = 0.0;
    double agreement = 0.0; // classifier index equals the exhaustive index
};

struct StageTable {
    Index n = 0;
    Index m = 0;
    int bits_per_stage = 0;
    std::size_t samples = 0;
    std::uint64_t seed = 0;
    std::uint64_t codebook_seed = 0;
    std::uint64_t config_hash = 0;
    std::vector<StageRow> rows;
    double theory_total = 0.0;
    double exhaustive_total = 0.0;
    double exhaustive_total_se = 0.0;
    double classifier_total = 0.0;
    double classifier_total_se = 0.0;
};

struct StageTableOptions {
    std::size_t samples = 10000;
    std::uint64_t seed = 1;
    std::uint64_t codebook_seed = 1;
    std::size_t threads = 0;
    std::size_t calibration_samples = 4000; // only used when m > 1
};

/// Expected distortion used for the selective thresholds: the exact finite
/// codebook form for m = 1, calibrated constants otherwise.
DistortionModel expected_ladder_model(Index n, Index m, int bits_per_stage, std::size_t calibration_samples,
                                      std::uint64_t seed);
double expected_flat_distortion(Index n, Index m, int bits, std::size_t calibration_samples, std::uint64_t seed);

/// Subspace of a channel matrix: normalization for one column, compact SVD otherwise.
SubspaceBasis channel_subspace(const ComplexMatrix& h);

/// Runs a sweep scenario. With `selector` null and config.classifier set, the
/// networks are loaded from config.networks.
ResultTable run_experiment(const ExperimentConfig& config, const StageSelector* selector = nullptr);

/// Per-stage distortions along the recursion, exhaustive and optionally with
/// a classifier running its own recursion on the same inputs.
StageTable run_stage_table(const CodebookLadder& ladder, const StageTableOptions& options,
                           const StageSelector* classifier = nullptr);

void write_csv(std::ostream& out, const ResultTable& table);
void write_csv(std::ostream& out, const StageTable& table);
void write_plotdata(std::ostream& out, const ResultTable& table);
void write_plotdata(std::ostream& out, const StageTable& table);

void emit_csv(const std::filesystem::path& path, const ResultTable& table);
void emit_csv(const std::filesystem::path& path, const StageTable& table);
void emit_plotdata(const std::filesystem::path& path, const ResultTable& table);
void emit_plotdata(const std::filesystem::path& path, const StageTable& table);

/// Column names of the sweep and stage CSV schemas.
const std::vector<std::string>& result_csv_columns();
const std::vector<std::string>& stage_csv_columns();

std::string_view library_version() noexcept;

} // namespace grassq
