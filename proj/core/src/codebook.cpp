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

#include "grassq/codebook.hpp"

#include <stdexcept>
#include <string>

#include "binary_io.hpp"
#include "grassq/errors.hpp"

namespace grassq {

namespace {

constexpr std::string_view kCodebookMagic{"GRQCODE\0", 8};

void write_header(io::BinaryWriter& w, CodebookKind kind, Index n, Index m, int bits, std::uint64_t seed)
{
    w.bytes(kCodebookMagic);
    w.u32(kCodebookFormatVersion);
    w.u32(static_cast<std::uint32_t>(kind));
    w.u32(static_cast<std::uint32_t>(n));
    w.u32(static_cast<std::uint32_t>(m));
    w.u32(static_cast<std::uint32_t>(bits));
    w.u32(0);
    w.u64(seed);
}

CodebookHeader parse_header(io::BinaryReader& r)
{
    r.expect_magic(kCodebookMagic);
    CodebookHeader h;
    h.version = r.u32();
    if (h.version != kCodebookFormatVersion)
        throw FormatError("'" + r.path().string() + "' has codebook format version " + std::to_string(h.version) +
                          ", expected " + std::to_string(kCodebookFormatVersion));
    const std::uint32_t kind = r.u32();
    h.n = r.u32();
    h.m = r.u32();
    h.bits = static_cast<int>(r.u32());
    r.u32();
    h.seed = r.u64();
    const bool dims_ok = h.n >= 1 && h.m >= 1 && h.n <= 4096 && h.m <= h.n;
    if (kind > 2 || !dims_ok || h.bits < 1 || h.bits > kMaxFlatBits)
        throw FormatError("'" + r.path().string() + "' has an invalid codebook header");
    h.kind = static_cast<CodebookKind>(kind);
    return h;
}

ComplexMatrix read_complements(io::BinaryReader& r, Index d, int bits)
{
    ComplexMatrix c = r.complex_matrix(d, Index{1} << bits);
    for (Index j = 0; j < c.cols(); ++j)
        if (std::abs(c.col(j).norm() - 1.0) > kStructuralTol)
            throw FormatError("'" + r.path().string() + "' contains a non-unit complement vector");
    return c;
}

} // namespace

SubspaceBasis StageCodebook::stage_matrix(std::size_t index) const
{
    if (index >= size()) throw std::out_of_range("stage codebook index out of range");
    return complement_completion(ComplexVector(complements.col(static_cast<Index>(index))));
}

FlatCodebook build_flat_codebook(Index n, Index m, int bits, std::uint64_t seed)
{
    if (bits > kMaxFlatBits)
        throw CapacityExceeded("flat codebook of " + std::to_string(bits) + " bits exceeds the exhaustive-search limit of " +
                               std::to_string(kMaxFlatBits) + " bits");
    if (bits < 1) throw std::invalid_argument("codebook bits must be positive");
    if (m < 1 || n < m) throw std::invalid_argument("flat codebook requires 1 <= m <= n");
    FlatCodebook cb{n, m, bits, seed, {}};
    const std::size_t count = std::size_t{1} << bits;
    cb.entries.reserve(count);
    for (std::size_t j = 0; j < count; ++j) {
        CounterRng rng(CounterRng::derive_seed(seed, j));
        cb.entries.push_back(random_semiunitary(n, m, rng));
    }
    return cb;
}

StageCodebook build_stage_codebook(Index input_dim, int bits, std::uint64_t seed)
{
    if (input_dim < 2) throw std::invalid_argument("stage codebook input dimension must be at least 2");
    if (bits < 1 || bits > kMaxStageBits)
        throw std::invalid_argument("stage codebook bits must lie in [1, " + std::to_string(kMaxStageBits) + "]");
    StageCodebook sc{input_dim, bits, seed, ComplexMatrix(input_dim, Index{1} << bits)};
    for (Index j = 0; j < sc.complements.cols(); ++j) {
        CounterRng rng(CounterRng::derive_seed(seed, static_cast<std::uint64_t>(j)));
        sc.complements.col(j) = random_semiunitary(input_dim, 1, rng).matrix().col(0);
    }
    return sc;
}

CodebookLadder build_ladder(Index n, Index m, int bits_per_stage, std::uint64_t master_seed)
{
    if (m < 1 || n <= m)
        throw std::invalid_argument("ladder requires n > m >= 1, got n=" + std::to_string(n) + " m=" + std::to_string(m));
    if (bits_per_stage < 1 || bits_per_stage > kMaxStageBits)
        throw std::invalid_argument("bits per stage must lie in [1, " + std::to_string(kMaxStageBits) + "]");
    CodebookLadder ladder{n, m, bits_per_stage, master_seed, {}};
    const Index stages = n - m;
    ladder.stages.reserve(static_cast<std::size_t>(stages));
    for (Index i = 0; i < stages; ++i)
        ladder.stages.push_back(
            build_stage_codebook(n - i, bits_per_stage, CounterRng::derive_seed(master_seed, static_cast<std::uint64_t>(i))));
    return ladder;
}

void save_codebook(const std::filesystem::path& path, const FlatCodebook& cb)
{
    io::BinaryWriter w(path);
    write_header(w, CodebookKind::flat, cb.n, cb.m, cb.bits, cb.seed);
    for (const auto& e : cb.entries) w.complex_matrix(e.matrix());
    w.finish();
}

void save_codebook(const std::filesystem::path& path, const StageCodebook& cb)
{
    io::BinaryWriter w(path);
    write_header(w, CodebookKind::stage, cb.input_dim, cb.output_dim(), cb.bits, cb.seed);
    w.complex_matrix(cb.complements);
    w.finish();
}

void save_codebook(const std::filesystem::path& path, const CodebookLadder& ladder)
{
    io::BinaryWriter w(path);
    write_header(w, CodebookKind::ladder, ladder.n, ladder.m, ladder.bits_per_stage, ladder.master_seed);
    for (const auto& s : ladder.stages) w.complex_matrix(s.complements);
    w.finish();
}

CodebookHeader read_codebook_header(const std::filesystem::path& path)
{
    io::BinaryReader r(path);
    return parse_header(r);
}

AnyCodebook load_codebook(const std::filesystem::path& path)
{
    io::BinaryReader r(path);
    const CodebookHeader h = parse_header(r);
    const auto payload = static_cast<std::uintmax_t>(16) << h.bits;
    switch (h.kind) {
    case CodebookKind::flat: {
        if (std::filesystem::file_size(path) < payload * static_cast<std::uintmax_t>(h.n * h.m))
            throw FormatError("'" + path.string() + "' is truncated");
        FlatCodebook cb{h.n, h.m, h.bits, h.seed, {}};
        const std::size_t count = std::size_t{1} << h.bits;
        cb.entries.reserve(count);
        for (std::size_t j = 0; j < count; ++j) {
            try {
                cb.entries.push_back(SubspaceBasis::from_orthonormal(r.complex_matrix(h.n, h.m)));
            } catch (const std::invalid_argument&) {
                throw FormatError("'" + path.string() + "' contains a non-semi-unitary entry");
            }
        }
        r.expect_end();
        return cb;
    }
    case CodebookKind::stage: {
        if (h.m != h.n - 1 || h.bits > kMaxStageBits) throw FormatError("'" + path.string() + "' has an invalid stage header");
        StageCodebook sc{h.n, h.bits, h.seed, read_complements(r, h.n, h.bits)};
        r.expect_end();
        return sc;
    }
    case CodebookKind::ladder: {
        if (h.m >= h.n || h.bits > kMaxStageBits) throw FormatError("'" + path.string() + "' has an invalid ladder header");
        CodebookLadder ladder{h.n, h.m, h.bits, h.seed, {}};
        for (Index i = 0; i < h.n - h.m; ++i) {
            const Index d = h.n - i;
            ladder.stages.push_back(StageCodebook{d, h.bits, CounterRng::derive_seed(h.seed, static_cast<std::uint64_t>(i)),
                                                  read_complements(r, d, h.bits)});
        }
        r.expect_end();
        return ladder;
    }
    }
    throw FormatError("'" + path.string() + "' has an unknown codebook kind");
}

AnyCodebook regenerate(const CodebookHeader& header)
{
    switch (header.kind) {
    case CodebookKind::flat: return build_flat_codebook(header.n, header.m, header.bits, header.seed);
    case CodebookKind::stage: return build_stage_codebook(header.n, header.bits, header.seed);
    case CodebookKind::ladder: return build_ladder(header.n, header.m, header.bits, header.seed);
    }
    throw std::invalid_argument("unknown codebook kind");
}

} // namespace grassq
