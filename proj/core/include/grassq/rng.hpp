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

#include <complex>
#include <cstdint>

namespace grassq {

/// Counter-based 64-bit generator.
///
/// Output i of a stream with key K is mix64(K + (i + 1) * 0x9E3779B97F4A7C15),
/// where mix64 is the SplitMix64 finalizer. The generator is fully described
/// by (key, counter), so streams can be positioned and split without
/// touching shared state.
///
/// Stream splitting: the child stream `id` of a parent key K has key
/// derive_seed(K, id) = mix64(K ^ mix64(id + 0xD1B54A32D192ED03)).
/// Codebook stages, codebook entries, trajectories and worker substreams
/// are all addressed this way, so results never depend on evaluation order.
class CounterRng {
  public:
    explicit CounterRng(std::uint64_t key, std::uint64_t counter = 0) noexcept
        : key_(key), counter_(counter) {}

    std::uint64_t key() const noexcept { return key_; }
    std::uint64_t counter() const noexcept { return counter_; }

    std::uint64_t next_u64() noexcept;

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept;

    /// Uniform integer on [0, bound) by multiply-shift; bound > 0.
    std::uint64_t below(std::uint64_t bound) noexcept;

    /// Standard real normal N(0, 1) via Box-Muller (consumes two outputs).
    double gaussian() noexcept;

    /// Circularly symmetric CN(0, 1): E|z|^2 = 1 (consumes two outputs).
    std::complex<double> complex_gaussian() noexcept;

    CounterRng substream(std::uint64_t id) const noexcept { return CounterRng(derive_seed(key_, id)); }

    static std::uint64_t mix64(std::uint64_t x) noexcept;
    static std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t id) noexcept;

  private:
    std::uint64_t key_;
    std::uint64_t counter_;
};

} // namespace grassq
