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
#include <string>
#include <string_view>
#include <vector>

#include "grassq/numerics.hpp"

namespace grassq {

enum class ChannelModel : std::uint32_t { iid = 0, gauss_markov = 1, clarke_sos = 2 };

std::string_view to_string(ChannelModel model);
ChannelModel parse_channel_model(std::string_view name);

/// Temporal correlation of a spatially white Rayleigh channel.
struct CorrelationSpec {
    enum class Kind { clarke, gauss_markov };
    Kind kind = Kind::gauss_markov;
    double doppler = 0.0; // normalized, f_d * T_s
    double alpha = 1.0;   // AR(1) coefficient, J0(2 pi doppler) for gauss_markov

    static CorrelationSpec gauss_markov(double doppler);
    static CorrelationSpec clarke(double doppler);
    /// Correlation between H[k] and H[k + lag] (per entry).
    double autocorrelation(int lag) const;
};

/// Time series H[0..K-1] of n x m channel matrices with unit-variance
/// CN(0, 1) entries.
struct ChannelTrajectory {
    Index n = 0;
    Index m = 0;
    ChannelModel model = ChannelModel::iid;
    double doppler = 0.0;
    std::uint64_t seed = 0;
    std::vector<ComplexMatrix> matrices;

    std::size_t length() const noexcept { return matrices.size(); }
};

/// Zeroth-order Bessel function of the first kind. Evaluates the periodic
/// integral J0(x) = (1/N) sum_k cos(x sin(theta_k)) with the trapezoidal
/// rule, which converges geometrically once N exceeds |x|; N is chosen so
/// the aliasing terms stay below 1e-15 for |x| <= 1000.
double bessel_j0(double x);

ChannelTrajectory generate_iid(Index n, Index m, std::size_t length, std::uint64_t seed);

/// h[k] = alpha h[k-1] + sqrt(1 - alpha^2) g[k] on vec(H) with alpha = J0(2 pi doppler).
ChannelTrajectory generate_gauss_markov(Index n, Index m, std::size_t length, double doppler, std::uint64_t seed);

/// Same recursion for an explicit AR(1) coefficient alpha in [-1, 1].
ChannelTrajectory generate_ar1(Index n, Index m, std::size_t length, double alpha, std::uint64_t seed);

/// Per-entry independent sum-of-sinusoids processes whose ensemble
/// autocorrelation is J0(2 pi doppler lag):
///   h(k) = M^{-1/2} sum_{l=1}^{M} exp(j (2 pi doppler k cos(a_l) + phi_l)),
///   a_l = (2 pi l - pi + theta) / M,
/// with theta and phi_l uniform on [-pi, pi) and drawn per entry.
ChannelTrajectory generate_clarke_sos(Index n, Index m, std::size_t length, double doppler, int num_sinusoids,
                                      std::uint64_t seed);

inline constexpr int kDefaultSinusoids = 32;

/// Binary trajectory dump; layout in docs/file-formats.md.
void save_trajectory(const std::filesystem::path& path, const ChannelTrajectory& trajectory);
ChannelTrajectory load_trajectory(const std::filesystem::path& path);

} // namespace grassq
