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

#include "grassq/channel.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "binary_io.hpp"
#include "grassq/errors.hpp"

namespace grassq {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr std::string_view kTrajectoryMagic{"GRQTRAJ\0", 8};
constexpr std::uint32_t kTrajectoryVersion = 1;

void check_dims(Index n, Index m, std::size_t length)
{
    if (n < 1 || m < 1) throw std::invalid_argument("channel dimensions must be positive");
    if (length < 1) throw std::invalid_argument("trajectory length must be at least 1");
}

ComplexMatrix gaussian_matrix(Index n, Index m, CounterRng& rng)
{
    ComplexMatrix h(n, m);
    for (Index j = 0; j < m; ++j)
        for (Index i = 0; i < n; ++i) h(i, j) = rng.complex_gaussian();
    return h;
}

} // namespace

std::string_view to_string(ChannelModel model)
{
    switch (model) {
    case ChannelModel::iid: return "iid";
    case ChannelModel::gauss_markov: return "gauss_markov";
    case ChannelModel::clarke_sos: return "clarke_sos";
    }
    return "unknown";
}

ChannelModel parse_channel_model(std::string_view name)
{
    if (name == "iid") return ChannelModel::iid;
    if (name == "gauss_markov") return ChannelModel::gauss_markov;
    if (name == "clarke_sos" || name == "clarke") return ChannelModel::clarke_sos;
    throw std::invalid_argument("unknown channel model '" + std::string(name) + "'");
}

double bessel_j0(double x)
{
    const double ax = std::abs(x);
    if (!std::isfinite(ax)) throw std::invalid_argument("bessel_j0 requires a finite argument");
    if (ax == 0.0) return 1.0;
    int nodes = static_cast<int>(std::ceil(ax + 12.0 * std::cbrt(ax) + 24.0));
    nodes += nodes % 4 == 0 ? 0 : 4 - nodes % 4;
    // Quarter-period sum: cos(x sin t) is even about t = 0 and t = pi/2.
    const int quarter = nodes / 4;
    const double step = 2.0 * kPi / nodes;
    double sum = 1.0 + std::cos(ax); // t = 0 and t = pi/2 (weight 1/2 each, doubled)
    for (int k = 1; k < quarter; ++k) sum += 2.0 * std::cos(ax * std::sin(k * step));
    return sum / (2.0 * quarter);
}

CorrelationSpec CorrelationSpec::gauss_markov(double doppler)
{
    if (!(doppler >= 0.0)) throw std::invalid_argument("normalized doppler must be nonnegative");
    return {Kind::gauss_markov, doppler, bessel_j0(2.0 * kPi * doppler)};
}

CorrelationSpec CorrelationSpec::clarke(double doppler)
{
    if (!(doppler >= 0.0)) throw std::invalid_argument("normalized doppler must be nonnegative");
    return {Kind::clarke, doppler, bessel_j0(2.0 * kPi * doppler)};
}

double CorrelationSpec::autocorrelation(int lag) const
{
    if (kind == Kind::gauss_markov) return std::pow(alpha, std::abs(lag));
    return bessel_j0(2.0 * kPi * doppler * lag);
}

ChannelTrajectory generate_iid(Index n, Index m, std::size_t length, std::uint64_t seed)
{
    check_dims(n, m, length);
    ChannelTrajectory t{n, m, ChannelModel::iid, 0.0, seed, {}};
    t.matrices.reserve(length);
    CounterRng rng(seed);
    for (std::size_t k = 0; k < length; ++k) t.matrices.push_back(gaussian_matrix(n, m, rng));
    return t;
}

ChannelTrajectory generate_ar1(Index n, Index m, std::size_t length, double alpha, std::uint64_t seed)
{
    check_dims(n, m, length);
    if (!(alpha >= -1.0 && alpha <= 1.0)) throw std::invalid_argument("AR(1) coefficient must lie in [-1, 1]");
    ChannelTrajectory t{n, m, ChannelModel::gauss_markov, 0.0, seed, {}};
    t.matrices.reserve(length);
    CounterRng rng(seed);
    t.matrices.push_back(gaussian_matrix(n, m, rng));
    const double innovation = std::sqrt(std::max(0.0, 1.0 - alpha * alpha));
    for (std::size_t k = 1; k < length; ++k) {
        ComplexMatrix next = alpha * t.matrices.back();
        if (innovation > 0.0) next += innovation * gaussian_matrix(n, m, rng);
        t.matrices.push_back(std::move(next));
    }
    return t;
}

ChannelTrajectory generate_gauss_markov(Index n, Index m, std::size_t length, double doppler, std::uint64_t seed)
{
    const CorrelationSpec spec = CorrelationSpec::gauss_markov(doppler);
    ChannelTrajectory t = generate_ar1(n, m, length, spec.alpha, seed);
    t.doppler = doppler;
    return t;
}

ChannelTrajectory generate_clarke_sos(Index n, Index m, std::size_t length, double doppler, int num_sinusoids,
                                      std::uint64_t seed)
{
    check_dims(n, m, length);
    if (num_sinusoids < 8) throw std::invalid_argument("sum-of-sinusoids needs at least 8 sinusoids");
    if (!(doppler >= 0.0)) throw std::invalid_argument("normalized doppler must be nonnegative");

    ChannelTrajectory t{n, m, ChannelModel::clarke_sos, doppler, seed, {}};
    t.matrices.assign(length, ComplexMatrix::Zero(n, m));
    CounterRng rng(seed);
    const double scale = 1.0 / std::sqrt(static_cast<double>(num_sinusoids));
    std::vector<double> freq(num_sinusoids);
    std::vector<double> phase(num_sinusoids);
    for (Index j = 0; j < m; ++j) {
        for (Index i = 0; i < n; ++i) {
            const double theta = kPi * (2.0 * rng.uniform() - 1.0);
            for (int l = 0; l < num_sinusoids; ++l) {
                const double angle = (2.0 * kPi * (l + 1) - kPi + theta) / num_sinusoids;
                freq[l] = 2.0 * kPi * doppler * std::cos(angle);
                phase[l] = kPi * (2.0 * rng.uniform() - 1.0);
            }
            for (std::size_t k = 0; k < length; ++k) {
                std::complex<double> acc{0.0, 0.0};
                for (int l = 0; l < num_sinusoids; ++l)
                    acc += std::polar(1.0, freq[l] * static_cast<double>(k) + phase[l]);
                t.matrices[k](i, j) = scale * acc;
            }
        }
    }
    return t;
}

void save_trajectory(const std::filesystem::path& path, const ChannelTrajectory& trajectory)
{
    io::BinaryWriter w(path);
    w.bytes(kTrajectoryMagic);
    w.u32(kTrajectoryVersion);
    w.u32(static_cast<std::uint32_t>(trajectory.n));
    w.u32(static_cast<std::uint32_t>(trajectory.m));
    w.u64(trajectory.matrices.size());
    w.u32(static_cast<std::uint32_t>(trajectory.model));
    w.f64(trajectory.doppler);
    w.u64(trajectory.seed);
    for (const auto& h : trajectory.matrices) w.complex_matrix(h);
    w.finish();
}

ChannelTrajectory load_trajectory(const std::filesystem::path& path)
{
    io::BinaryReader r(path);
    r.expect_magic(kTrajectoryMagic);
    if (const auto version = r.u32(); version != kTrajectoryVersion)
        throw FormatError("'" + path.string() + "' has unsupported trajectory version " + std::to_string(version));
    ChannelTrajectory t;
    t.n = r.u32();
    t.m = r.u32();
    const std::uint64_t length = r.u64();
    const std::uint32_t model = r.u32();
    if (model > 2 || t.n < 1 || t.m < 1 || t.n > 4096 || t.m > 4096)
        throw FormatError("'" + path.string() + "' has an invalid trajectory header");
    t.model = static_cast<ChannelModel>(model);
    t.doppler = r.f64();
    t.seed = r.u64();
    const auto bytes_needed = length * static_cast<std::uint64_t>(t.n * t.m) * 16;
    if (std::filesystem::file_size(path) < bytes_needed) throw FormatError("'" + path.string() + "' is truncated");
    t.matrices.reserve(length);
    for (std::uint64_t k = 0; k < length; ++k) t.matrices.push_back(r.complex_matrix(t.n, t.m));
    r.expect_end();
    return t;
}

} // namespace grassq
