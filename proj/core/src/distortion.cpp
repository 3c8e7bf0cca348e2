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

#include "grassq/distortion.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "grassq/errors.hpp"

namespace grassq {

namespace {

constexpr int kMaxProbeBits = 14;

// Stirling series for lgamma(z), without the (z - 1/2) ln z - z part.
double stirling_tail(double z)
{
    const double r = 1.0 / (z * z);
    return (1.0 / 12.0 - r * (1.0 / 360.0 - r * (1.0 / 1260.0 - r / 1680.0))) / z;
}

// Gamma(N + 1) / Gamma(N + 1 + s) for N = 2^bits. The direct lgamma
// difference loses digits to cancellation once N is large.
double gamma_ratio(int bits, double s)
{
    const double z = std::ldexp(1.0, bits) + 1.0;
    if (bits < 6) return std::exp(std::lgamma(z) - std::lgamma(z + s));
    const double log_ratio =
        (z + s - 0.5) * std::log1p(s / z) + s * std::log(z) - s + stirling_tail(z + s) - stirling_tail(z);
    return std::exp(-log_ratio);
}

} // namespace

DistortionModel DistortionModel::from_stage_values(Index n, Index m, int bits_per_stage, std::vector<double> stage)
{
    DistortionModel dm{n, m, bits_per_stage, std::move(stage), {}, 0.0};
    double keep = 1.0;
    for (double d : dm.stage) {
        if (!(d > 0.0 && d < 1.0)) throw std::invalid_argument("stage distortion must lie in (0, 1)");
        keep *= 1.0 - d;
    }
    dm.total = 1.0 - keep;
    return dm;
}

double closed_form_constant_m1(Index n)
{
    if (n < 2) throw std::invalid_argument("closed-form constant requires n >= 2");
    return std::tgamma(1.0 + 1.0 / static_cast<double>(n - 1));
}

double theory_single_stage(Index n, Index m, int bits, std::optional<double> constant)
{
    if (m < 1 || n <= m) throw std::invalid_argument("theory_single_stage requires n > m >= 1");
    if (bits < 0) throw std::invalid_argument("bits must be nonnegative");
    if (!constant) {
        if (m != 1)
            throw NeedsCalibration("no closed-form constant for G(" + std::to_string(n) + ", " + std::to_string(m) +
                                   "); calibrate it first");
        constant = closed_form_constant_m1(n);
    }
    const double md = static_cast<double>(m);
    return *constant / md * std::exp2(-static_cast<double>(bits) / (md * static_cast<double>(n - m)));
}

double exact_single_stage_m1(Index n, int bits)
{
    if (n < 2) throw std::invalid_argument("exact_single_stage_m1 requires n >= 2");
    const double s = 1.0 / static_cast<double>(n - 1);
    return std::tgamma(1.0 + s) * gamma_ratio(bits, s);
}

double exact_stage_m1(Index input_dim, int bits)
{
    if (input_dim < 2) throw std::invalid_argument("exact_stage_m1 requires d >= 2");
    return 1.0 / (static_cast<double>(input_dim - 1) * std::ldexp(1.0, bits) + 1.0);
}

DistortionModel theory_multi_stage(Index n, Index m, int bits_per_stage, std::span<const double> constants)
{
    if (m < 1 || n <= m) throw std::invalid_argument("theory_multi_stage requires n > m >= 1");
    const auto stages = static_cast<std::size_t>(n - m);
    std::vector<double> stage(stages);
    if (m == 1) {
        for (std::size_t i = 0; i < stages; ++i) stage[i] = exact_stage_m1(n - static_cast<Index>(i), bits_per_stage);
        return DistortionModel::from_stage_values(n, m, bits_per_stage, std::move(stage));
    }
    if (constants.size() != stages)
        throw NeedsCalibration("theory_multi_stage for m = " + std::to_string(m) + " needs " + std::to_string(stages) +
                               " calibrated constants, got " + std::to_string(constants.size()));
    const double md = static_cast<double>(m);
    for (std::size_t i = 0; i < stages; ++i) stage[i] = constants[i] / md * std::exp2(-bits_per_stage / md);
    DistortionModel dm = DistortionModel::from_stage_values(n, m, bits_per_stage, std::move(stage));
    dm.constants.assign(constants.begin(), constants.end());
    return dm;
}

DistortionModel theory_multi_stage(const CodebookLadder& ladder, std::span<const double> constants)
{
    return theory_multi_stage(ladder.n, ladder.m, ladder.bits_per_stage, constants);
}

Calibration calibrate_constant(Index d_prev, Index m, Index d_next, int b_probe, std::size_t samples, CounterRng& rng)
{
    if (m < 1 || d_next < m || d_prev <= d_next)
        throw std::invalid_argument("calibrate_constant requires d_prev > d_next >= m >= 1");
    if (b_probe < 1 || b_probe > kMaxProbeBits)
        throw std::invalid_argument("probe bits must lie in [1, " + std::to_string(kMaxProbeBits) + "]");
    if (samples < 2) throw std::invalid_argument("calibration needs at least two samples");

    const double md = static_cast<double>(m);
    const double scale = md * std::exp2(static_cast<double>(b_probe) / (md * static_cast<double>(d_prev - d_next)));
    const std::size_t entries = std::size_t{1} << b_probe;
    const bool complement_form = d_next == d_prev - 1;

    double sum = 0.0;
    double sum_sq = 0.0;
    for (std::size_t s = 0; s < samples; ++s) {
        const SubspaceBasis b = random_semiunitary(d_prev, m, rng);
        double best = 1.0;
        for (std::size_t e = 0; e < entries; ++e) {
            double dist;
            if (complement_form) {
                // Distance to the complement of q is ||B^H q||^2 / m.
                const SubspaceBasis q = random_semiunitary(d_prev, 1, rng);
                dist = (b.matrix().adjoint() * q.matrix()).squaredNorm() / md;
            } else {
                dist = chordal_distance(b, random_semiunitary(d_prev, d_next, rng));
            }
            best = std::min(best, dist);
        }
        const double k = scale * best;
        sum += k;
        sum_sq += k * k;
    }
    const double count = static_cast<double>(samples);
    const double mean = sum / count;
    const double var = std::max(0.0, (sum_sq - count * mean * mean) / (count - 1.0));
    Calibration c;
    c.constant = mean;
    c.standard_error = std::sqrt(var / count);
    c.mean_distortion = mean / scale;
    c.samples = samples;
    c.wide_interval = c.standard_error > 0.05 * mean;
    return c;
}

std::vector<Calibration> calibrate_ladder(Index n, Index m, int bits_per_stage, std::size_t samples, std::uint64_t seed)
{
    if (m < 1 || n <= m) throw std::invalid_argument("calibrate_ladder requires n > m >= 1");
    const int probe = std::min(bits_per_stage, kMaxProbeBits);
    std::vector<Calibration> out;
    for (Index i = 0; i < n - m; ++i) {
        CounterRng rng(CounterRng::derive_seed(seed, static_cast<std::uint64_t>(i)));
        Calibration c = calibrate_constant(n - i, m, n - i - 1, probe, samples, rng);
        out.push_back(c);
    }
    return out;
}

} // namespace grassq
