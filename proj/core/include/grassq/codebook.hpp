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
#include <variant>
#include <vector>

#include "grassq/numerics.hpp"

namespace grassq {

/// Largest single-stage codebook the library will build (exhaustive search
/// over 2^20 entries). Larger sizes are what the recursive quantizer avoids.
inline constexpr int kMaxFlatBits = 20;
inline constexpr int kMaxStageBits = 16;

/// Random vector quantization codebook of 2^bits isotropic n x m entries.
/// Entry j is drawn from the stream CounterRng(derive_seed(seed, j)).
struct FlatCodebook {
    Index n = 0;
    Index m = 0;
    int bits = 0;
    std::uint64_t seed = 0;
    std::vector<SubspaceBasis> entries;

    std::size_t size() const noexcept { return entries.size(); }
};

/// Codebook of one recursion stage with unit dimension step: the stage
/// matrices are the (d-1)-dimensional orthogonal complements of the stored
/// unit vectors, derived on demand by complement_completion.
struct StageCodebook {
    Index input_dim = 0; // d
    int bits = 0;
    std::uint64_t seed = 0;
    ComplexMatrix complements; // d x 2^bits, unit-norm columns

    std::size_t size() const noexcept { return static_cast<std::size_t>(complements.cols()); }
    Index output_dim() const noexcept { return input_dim - 1; }
    /// d x (d-1) stage matrix for entry `index`.
    SubspaceBasis stage_matrix(std::size_t index) const;
};

/// The R = n - m stage codebooks of the recursive quantizer, for input
/// dimensions n, n-1, ..., m+1. Stage i (0-based) uses
/// seed derive_seed(master_seed, i).
struct CodebookLadder {
    Index n = 0;
    Index m = 0;
    int bits_per_stage = 0;
    std::uint64_t master_seed = 0;
    std::vector<StageCodebook> stages;

    std::size_t stage_count() const noexcept { return stages.size(); }
    /// Feedback bits when every stage is updated.
    int full_update_bits() const noexcept { return static_cast<int>(stages.size()) * bits_per_stage; }
};

FlatCodebook build_flat_codebook(Index n, Index m, int bits, std::uint64_t seed);
StageCodebook build_stage_codebook(Index input_dim, int bits, std::uint64_t seed);
CodebookLadder build_ladder(Index n, Index m, int bits_per_stage, std::uint64_t master_seed);

enum class CodebookKind : std::uint32_t { flat = 0, stage = 1, ladder = 2 };

/// Everything needed to regenerate a codebook without its entries.
struct CodebookHeader {
    std::uint32_t version = 0;
    CodebookKind kind = CodebookKind::flat;
    Index n = 0; // ambient (flat, ladder) or input dim (stage)
    Index m = 0; // subspace dim (flat, ladder); output dim (stage)
    int bits = 0;
    std::uint64_t seed = 0;
};

using AnyCodebook = std::variant<FlatCodebook, StageCodebook, CodebookLadder>;

inline constexpr std::uint32_t kCodebookFormatVersion = 1;

void save_codebook(const std::filesystem::path& path, const FlatCodebook& cb);
void save_codebook(const std::filesystem::path& path, const StageCodebook& cb);
void save_codebook(const std::filesystem::path& path, const CodebookLadder& ladder);

CodebookHeader read_codebook_header(const std::filesystem::path& path);
AnyCodebook load_codebook(const std::filesystem::path& path);
/// Rebuilds the codebook described by a header from its seed.
AnyCodebook regenerate(const CodebookHeader& header);

} // namespace grassq
