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

#include "grassq/rng.hpp"

#include <cmath>
#include <numbers>

namespace grassq {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kSplitSalt = 0xD1B54A32D192ED03ULL;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
__extension__ typedef unsigned __int128 uint128;
} // namespace

std::uint64_t CounterRng::mix64(std::uint64_t x) noexcept
{
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t CounterRng::derive_seed(std::uint64_t parent, std::uint64_t id) noexcept
{
    return mix64(parent ^ mix64(id + kSplitSalt));
}

std::uint64_t CounterRng::next_u64() noexcept
{
    ++counter_;
    return mix64(key_ + counter_ * kGolden);
}

double CounterRng::uniform() noexcept
{
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t CounterRng::below(std::uint64_t bound) noexcept
{
    return static_cast<std::uint64_t>((static_cast<uint128>(next_u64()) * bound) >> 64);
}

double CounterRng::gaussian() noexcept
{
    const double u1 = 1.0 - uniform(); // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

std::complex<double> CounterRng::complex_gaussian() noexcept
{
    // |z|^2 = -log(u1) is Exp(1); the phase is uniform and independent.
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-std::log(u1));
    return std::polar(r, kTwoPi * u2);
}

} // namespace grassq
