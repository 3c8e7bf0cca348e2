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

#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "grassq/codebook.hpp"
#include "grassq/errors.hpp"

using namespace grassq;

namespace {

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const char* name) : path(std::filesystem::temp_directory_path() / name)
    {
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

void patch_byte(const std::filesystem::path& p, std::streamoff offset, char value)
{
    std::fstream f(p, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(offset);
    f.put(value);
}

bool same_entries(const FlatCodebook& a, const FlatCodebook& b)
{
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a.entries[i].matrix() != b.entries[i].matrix()) return false;
    return true;
}

} // namespace

TEST_CASE("flat codebooks are seeded and semi-unitary", "[codebook]")
{
    const FlatCodebook small = build_flat_codebook(2, 1, 1, 17);
    REQUIRE(small.size() == 2);
    CHECK(same_entries(small, build_flat_codebook(2, 1, 1, 17)));
    for (const auto& e : small.entries) CHECK(std::abs(e.matrix().norm() - 1.0) < 1e-12);

    const FlatCodebook cb = build_flat_codebook(6, 2, 9, 3);
    REQUIRE(cb.size() == 512);
    for (const auto& e : cb.entries) {
        REQUIRE(e.ambient_dim() == 6);
        REQUIRE(e.subspace_dim() == 2);
        REQUIRE(e.orthonormality_error() <= 1e-10);
    }
    CHECK_FALSE(same_entries(cb, build_flat_codebook(6, 2, 9, 4)));

    CHECK_THROWS_AS(build_flat_codebook(4, 1, 21, 1), CapacityExceeded);
    CHECK_THROWS_AS(build_flat_codebook(2, 3, 4, 1), std::invalid_argument);
}

TEST_CASE("ladders have one complement codebook per dimension step", "[codebook]")
{
    const CodebookLadder ladder = build_ladder(32, 1, 6, 1);
    REQUIRE(ladder.stage_count() == 31);
    CHECK(ladder.full_update_bits() == 186);
    for (std::size_t i = 0; i < ladder.stage_count(); ++i) {
        const StageCodebook& sc = ladder.stages[i];
        CHECK(sc.input_dim == 32 - static_cast<Index>(i));
        CHECK(sc.size() == 64);
        CHECK(sc.complements.rows() == sc.input_dim);
        for (Index j = 0; j < sc.complements.cols(); ++j)
            REQUIRE(std::abs(sc.complements.col(j).norm() - 1.0) <= 1e-12);
    }
    const SubspaceBasis w = ladder.stages[5].stage_matrix(7);
    CHECK(w.ambient_dim() == 27);
    CHECK(w.subspace_dim() == 26);
    CHECK(w.orthonormality_error() <= 1e-10);
    CHECK_THROWS_AS(ladder.stages[0].stage_matrix(64), std::out_of_range);

    const CodebookLadder single = build_ladder(2, 1, 4, 9);
    CHECK(single.stage_count() == 1);
    CHECK(single.stages[0].input_dim == 2);

    // Stage seeds are distinct, so stages of equal dimension in different ladders differ.
    CHECK(ladder.stages[0].seed != ladder.stages[1].seed);
    CHECK(build_ladder(8, 2, 5, 4).stage_count() == 6);

    CHECK_THROWS_AS(build_ladder(3, 3, 4, 1), std::invalid_argument);
    CHECK_THROWS_AS(build_ladder(4, 0, 4, 1), std::invalid_argument);
    CHECK_THROWS_AS(build_ladder(4, 1, 17, 1), std::invalid_argument);
}

TEST_CASE("codebook files round-trip bitwise", "[codebook][io]")
{
    TempDir dir("grassq_codebook_roundtrip");
    const FlatCodebook flat = build_flat_codebook(6, 2, 9, 11);
    save_codebook(dir.path / "flat.grqc", flat);
    const auto loaded = std::get<FlatCodebook>(load_codebook(dir.path / "flat.grqc"));
    CHECK(loaded.seed == 11);
    CHECK(loaded.bits == 9);
    CHECK(same_entries(loaded, flat));

    const CodebookHeader h = read_codebook_header(dir.path / "flat.grqc");
    CHECK(h.version == kCodebookFormatVersion);
    CHECK(h.kind == CodebookKind::flat);
    CHECK(same_entries(std::get<FlatCodebook>(regenerate(h)), flat));

    const CodebookLadder ladder = build_ladder(8, 1, 5, 21);
    save_codebook(dir.path / "ladder.grqc", ladder);
    const auto back = std::get<CodebookLadder>(load_codebook(dir.path / "ladder.grqc"));
    REQUIRE(back.stage_count() == ladder.stage_count());
    for (std::size_t i = 0; i < ladder.stage_count(); ++i)
        CHECK(back.stages[i].complements == ladder.stages[i].complements);
    const auto regen = std::get<CodebookLadder>(regenerate(read_codebook_header(dir.path / "ladder.grqc")));
    for (std::size_t i = 0; i < ladder.stage_count(); ++i)
        CHECK(regen.stages[i].complements == ladder.stages[i].complements);

    const StageCodebook stage = build_stage_codebook(5, 3, 8);
    save_codebook(dir.path / "stage.grqc", stage);
    CHECK(std::get<StageCodebook>(load_codebook(dir.path / "stage.grqc")).complements == stage.complements);
}

TEST_CASE("damaged codebook files are rejected", "[codebook][io]")
{
    TempDir dir("grassq_codebook_damage");
    const auto path = dir.path / "cb.grqc";
    save_codebook(path, build_flat_codebook(4, 2, 6, 1));

    const auto size = std::filesystem::file_size(path);
    std::filesystem::resize_file(path, size - 16);
    CHECK_THROWS_AS(load_codebook(path), FormatError);

    save_codebook(path, build_flat_codebook(4, 2, 6, 1));
    patch_byte(path, 8, 99); // format version
    CHECK_THROWS_AS(load_codebook(path), FormatError);

    save_codebook(path, build_flat_codebook(4, 2, 6, 1));
    patch_byte(path, 0, 'X');
    CHECK_THROWS_AS(load_codebook(path), FormatError);

    CHECK_THROWS_AS(load_codebook(dir.path / "missing.grqc"), IoError);
}
