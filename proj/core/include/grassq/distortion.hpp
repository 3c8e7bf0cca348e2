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

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "grassq/codebook.hpp"
#include "grassq/numerics.hpp"
#include "grassq/rng.hpp"

namespace grassq {

/// Expected per-stage and total chordal distortion of a recursive quantizer.
/// total = 1 - prod_i (1 - stage[i]).
struct DistortionModel {
    Index n = 0;
    Index m = 0;
    int bits_per_stage = 0;
    std::vector<double> stage;
    std::vector<double> constants; // k for each stage (empty for the exact m = 1 form)
    double total = 0.0;

    static DistortionModel from_stage_values(Index n, Index m, int bits_per_stage, std::vector<double> stage);
    std::size_t stage_count() const noexcept { return stage.size(); }
};

/// Random vector quantization law (1/m) k 2^{-b / (m (n - m))}. Without a
/// constant, m = 1 falls back to the closed form k = Gamma(1 + 1/(n-1));
/// m > 1 throws NeedsCalibration.
double theory_single_stage(Index n, Index m, int bits, std::optional<double> constant = std::nullopt);

/// Gamma(1 + 1/(n-1)): large-codebook constant for G(n, 1).
double closed_form_constant_m1(Index n);

/// Exact mean of the minimum chordal distance over 2^bits isotropic lines
/// in C^n: Gamma(1 + 1/(n-1)) Gamma(N+1) / Gamma(N+1+1/(n-1)).
double exact_single_stage_m1(Index n, int bits);

/// Exact mean stage distortion for m = 1 and unit dimension step:
/// 1 / ((d - 1) 2^bits + 1), the mean of the minimum of 2^bits iid Beta(1, d-1).
double exact_stage_m1(Index input_dim, int bits);

/// Per-stage law (1/m) k_i 2^{-b_i/m}. m = 1 uses exact_stage_m1 and ignores
/// `constants`; m > 1 requires one calibrated constant per stage.
DistortionModel theory_multi_stage(Index n, Index m, int bits_per_stage, std::span<const double> constants = {});
DistortionModel theory_multi_stage(const CodebookLadder& ladder, std::span<const double> constants = {});

struct Calibration {
    double constant = 0.0;
    double standard_error = 0.0;
    double mean_distortion = 0.0;
    std::size_t samples = 0;
    bool wide_interval = false; // standard error above 5% of the estimate
};

/// Monte-Carlo estimate of the constant k in
/// E[d] = (1/m) k 2^{-b / (m (d_prev - d_next))}
/// for quantizing isotropic m-dimensional subspaces of C^{d_prev} with fresh
/// random codebooks of 2^b isotropic d_next-dimensional subspaces.
Calibration calibrate_constant(Index d_prev, Index m, Index d_next, int b_probe, std::size_t samples,
                               CounterRng& rng);

/// Calibrated constants for every stage of an (n, m) ladder at its own
/// bit width (capped at 14 probe bits).
std::vector<Calibration> calibrate_ladder(Index n, Index m, int bits_per_stage, std::size_t samples,
                                          std::uint64_t seed);

} // namespace grassq
