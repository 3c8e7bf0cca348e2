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

#include <cmath>

#include "grassq/channel.hpp"
#include "grassq/distortion.hpp"
#include "grassq/errors.hpp"
#include "grassq/quantizer.hpp"
#include "support.hpp"

using namespace grassq;

namespace {

ComplexVector unit(Index d, Index k)
{
    ComplexVector e = ComplexVector::Zero(d);
    e(k) = 1.0;
    return e;
}

SubspaceBasis line(const ComplexVector& v) { return SubspaceBasis::from_vector(v); }

// Brute-force stage search: scan the completed (d-1)-dimensional codebook.
std::pair<std::size_t, double> brute_force_stage(const SubspaceBasis& b, const StageCodebook& sc)
{
    std::size_t best = 0;
    double best_d = 2.0;
    for (std::size_t j = 0; j < sc.size(); ++j) {
        const double d = chordal_distance(b, sc.stage_matrix(j));
        if (d < best_d) {
            best_d = d;
            best = j;
        }
    }
    return {best, best_d};
}

} // namespace

TEST_CASE("single-stage quantizer finds an exact entry", "[quantizer][single]")
{
    const FlatCodebook cb = build_flat_codebook(6, 2, 7, 3);
    const SingleStageResult r = quantize_single_stage(cb.entries[42], cb);
    CHECK(r.index == 42);
    CHECK(r.distortion <= 1e-12);
    CHECK(r.reconstruction.matrix() == cb.entries[42].matrix());

    FlatCodebook dup = cb;
    dup.entries[10] = cb.entries[42];
    CHECK(quantize_single_stage(cb.entries[42], dup).index == 10);

    CounterRng rng(1);
    CHECK_THROWS_AS(quantize_single_stage(random_semiunitary(5, 2, rng), cb), std::invalid_argument);
}

TEST_CASE("single-stage RVQ on G(2,1) has mean distortion 1/(N+1)", "[quantizer][single]")
{
    // The distances to N iid isotropic lines are iid Uniform(0,1).
    CounterRng rng(2);
    double sum = 0.0;
    int count = 0;
    for (std::uint64_t c = 0; c < 1000; ++c) {
        const FlatCodebook cb = build_flat_codebook(2, 1, 6, CounterRng::derive_seed(77, c));
        for (int t = 0; t < 100; ++t, ++count) sum += quantize_single_stage(random_semiunitary(2, 1, rng), cb).distortion;
    }
    CHECK(std::abs(sum / count - 1.0 / 65.0) <= 0.03 / 65.0);
}

TEST_CASE("sqbc keeps the residual semi-unitary", "[quantizer][sqbc]")
{
    const ComplexMatrix id = ComplexMatrix::Identity(5, 5);
    const auto b = SubspaceBasis::from_orthonormal(id.leftCols(2));
    const auto w = SubspaceBasis::from_orthonormal(id.leftCols(4));
    const SubspaceBasis out = sqbc(b, w);
    CHECK((out.matrix() - w.matrix().adjoint() * b.matrix()).norm() <= 1e-15);

    CounterRng rng(3);
    for (int t = 0; t < 500; ++t) {
        const SubspaceBasis bb = random_semiunitary(6, 2, rng);
        const SubspaceBasis ww = random_semiunitary(6, 4, rng);
        REQUIRE(sqbc(bb, ww).orthonormality_error() <= 1e-9);
    }
    for (int t = 0; t < 500; ++t) {
        // The stage keeps exactly the stage error: span(W sqbc) is the projection of span(b).
        const SubspaceBasis bb = random_semiunitary(3, 1, rng);
        const SubspaceBasis ww = random_semiunitary(3, 2, rng);
        const SubspaceBasis lifted = SubspaceBasis::from_orthonormal(ww.matrix() * sqbc(bb, ww).matrix(), 1e-9);
        REQUIRE(std::abs(chordal_distance(bb, lifted) - chordal_distance(bb, ww)) <= 1e-9);
    }
    const auto orth = SubspaceBasis::from_orthonormal(id.col(4));
    CHECK_THROWS_AS(sqbc(orth, w), DegenerateStep);
}

TEST_CASE("stage selection by complements", "[quantizer][stage]")
{
    StageCodebook sc = build_stage_codebook(3, 2, 5);
    sc.complements.col(2) = unit(3, 1);
    const StageChoice c = stage_select(line(unit(3, 0)), sc);
    CHECK(c.index == 2);
    CHECK(c.distortion <= 1e-15);
    CHECK(c.stage_matrix.ambient_dim() == 3);
    CHECK(c.stage_matrix.subspace_dim() == 2);
    CHECK_THROWS_AS(stage_select(line(unit(4, 0)), sc), std::invalid_argument);
}

TEST_CASE("complement search equals brute-force chordal search", "[quantizer][stage]")
{
    CounterRng rng(4);
    std::size_t instances = 0;
    for (Index d = 2; d <= 8; ++d) {
        for (int bits = 1; bits <= 6; ++bits) {
            const StageCodebook sc = build_stage_codebook(d, bits, CounterRng::derive_seed(d, bits));
            for (Index m = 1; m < d; ++m) {
                for (int t = 0; t < 20; ++t, ++instances) {
                    const SubspaceBasis b = random_semiunitary(d, m, rng);
                    const StageChoice c = stage_select(b, sc);
                    const auto [idx, dist] = brute_force_stage(b, sc);
                    REQUIRE(std::abs(c.distortion - dist) <= 1e-12);
                    REQUIRE(std::abs(stage_distortion(b, sc, c.index) - c.distortion) <= 1e-15);
                    if (idx != c.index) {
                        // Only an exact numerical tie may pick a different entry.
                        REQUIRE(std::abs(chordal_distance(b, sc.stage_matrix(idx)) - c.distortion) <= 1e-12);
                    }
                }
            }
        }
    }
    CHECK(instances > 3000);

    const StageCodebook sc = build_stage_codebook(4, 4, 9);
    int agree = 0;
    for (int t = 0; t < 1000; ++t) {
        const SubspaceBasis b = random_semiunitary(4, 1, rng);
        agree += stage_select(b, sc).index == brute_force_stage(b, sc).first;
    }
    CHECK(agree == 1000);
}

TEST_CASE("stage distortion follows the Beta(1, d-1) minimum", "[quantizer][stage]")
{
    // min of N iid Beta(1, d-1) variables has mean 1/((d-1) N + 1).
    CounterRng rng(5);
    for (auto [d, trials] : {std::pair<Index, int>{4, 40000}, {32, 20000}}) {
        double sum = 0.0;
        for (int t = 0; t < trials; ++t) {
            const StageCodebook sc = build_stage_codebook(d, 6, CounterRng::derive_seed(1000 + d, t / 10));
            sum += stage_select(random_semiunitary(d, 1, rng), sc).distortion;
        }
        const double oracle = 1.0 / (static_cast<double>(d - 1) * 64.0 + 1.0);
        INFO("d=" << d << " mean=" << sum / trials << " oracle=" << oracle);
        CHECK(std::abs(sum / trials - oracle) <= 0.03 * oracle);
    }
}

TEST_CASE("full recursion reduces to single-stage search for n = 2", "[quantizer][recursive]")
{
    const CodebookLadder ladder = build_ladder(2, 1, 5, 6);
    FlatCodebook implied{2, 1, 5, 0, {}};
    for (std::size_t j = 0; j < ladder.stages[0].size(); ++j) implied.entries.push_back(ladder.stages[0].stage_matrix(j));
    CounterRng rng(6);
    for (int t = 0; t < 300; ++t) {
        const SubspaceBasis u = random_semiunitary(2, 1, rng);
        const MultiStageResult r = recursive_quantize_full(u, ladder);
        const SingleStageResult s = quantize_single_stage(u, implied);
        REQUIRE(r.indices.size() == 1);
        REQUIRE(std::abs(r.stage_distortions[0] - s.distortion) <= 1e-12);
        REQUIRE(chordal_distance(r.reconstruction, s.reconstruction) <= 1e-12);
    }
}

TEST_CASE("multiplicative error composition for m = 1", "[quantizer][recursive]")
{
    const CodebookLadder ladder = build_ladder(8, 1, 4, 7);
    CounterRng rng(7);
    for (int t = 0; t < 500; ++t) {
        const SubspaceBasis u = random_semiunitary(8, 1, rng);
        const MultiStageResult r = recursive_quantize_full(u, ladder);
        double keep = 1.0;
        for (double d : r.stage_distortions) keep *= 1.0 - d;
        REQUIRE(std::abs((1.0 - keep) - chordal_distance(u, r.reconstruction)) <= 1e-9);
    }
}

TEST_CASE("reconstructions are semi-unitary", "[quantizer][recursive]")
{
    CounterRng rng(8);
    for (auto [n, m] : {std::pair<Index, Index>{6, 1}, {6, 2}, {8, 3}, {5, 4}}) {
        const CodebookLadder ladder = build_ladder(n, m, 4, 8);
        for (int t = 0; t < 200; ++t) {
            const MultiStageResult r = recursive_quantize_full(random_semiunitary(n, m, rng), ladder);
            REQUIRE(r.reconstruction.ambient_dim() == n);
            REQUIRE(r.reconstruction.subspace_dim() == m);
            REQUIRE(r.reconstruction.orthonormality_error() <= 1e-9);
            REQUIRE(r.indices.size() == ladder.stage_count());
        }
    }
}

TEST_CASE("measured distortion does not grow with stage bits", "[quantizer][recursive]")
{
    CounterRng rng(9);
    double prev_mean = 1.0, prev_se = 0.0;
    for (int bits : {2, 4, 6, 8}) {
        const CodebookLadder ladder = build_ladder(4, 1, bits, 10);
        double sum = 0.0, sum_sq = 0.0;
        const int n = 10000;
        for (int t = 0; t < n; ++t) {
            const SubspaceBasis u = random_semiunitary(4, 1, rng);
            const double d = chordal_distance(u, recursive_quantize_full(u, ladder).reconstruction);
            sum += d;
            sum_sq += d * d;
        }
        const double mean = sum / n;
        const double se = std::sqrt((sum_sq / n - mean * mean) / n);
        INFO("bits=" << bits << " mean=" << mean);
        CHECK(mean <= prev_mean + std::max(se, prev_se));
        prev_mean = mean;
        prev_se = se;
    }
}

TEST_CASE("feedback header accounting", "[quantizer][selective]")
{
    CHECK(feedback_header_bits(1) == 1);
    CHECK(feedback_header_bits(3) == 2);
    CHECK(feedback_header_bits(7) == 3);
    CHECK(feedback_header_bits(15) == 4);
    CHECK(feedback_header_bits(31) == 5);
    CHECK_THROWS_AS((Hysteresis{1.2, 1.5}.validate()), std::invalid_argument);
    CHECK_THROWS_AS((Hysteresis{2.0, 0.5}.validate()), std::invalid_argument);
    CHECK_NOTHROW((Hysteresis{1.0, 1.0}.validate()));
}

TEST_CASE("selective quantizer on a static channel updates once", "[quantizer][selective]")
{
    const CodebookLadder ladder = build_ladder(8, 1, 6, 11);
    const DistortionModel dm = theory_multi_stage(ladder);
    QuantizerState state(ladder, Hysteresis{});
    CounterRng rng(11);
    const SubspaceBasis u = random_semiunitary(8, 1, rng);
    const FeedbackRecord first = recursive_quantize_selective(u, state, dm);
    CHECK(first.updated_stages == ladder.stage_count());
    CHECK(first.mode == UpdateMode::full);
    CHECK(first.bit_cost == feedback_header_bits(7) + 42);
    for (int k = 0; k < 50; ++k) {
        const FeedbackRecord r = recursive_quantize_selective(u, state, dm);
        REQUIRE(r.updated_stages == 0);
        REQUIRE(r.bit_cost == feedback_header_bits(7));
        REQUIRE(r.indices.empty());
    }
}

TEST_CASE("selective quantizer on memoryless inputs updates every stage", "[quantizer][selective]")
{
    const CodebookLadder ladder = build_ladder(16, 1, 6, 12);
    const DistortionModel dm = theory_multi_stage(ladder);
    QuantizerState state(ladder, Hysteresis{2.0, 1.5});
    CounterRng rng(12);
    int full = 0, any = 0;
    const int n = 2000;
    for (int k = 0; k < n; ++k) {
        const FeedbackRecord r = recursive_quantize_selective(random_semiunitary(16, 1, rng), state, dm);
        full += r.updated_stages == ladder.stage_count();
        any += r.updated_stages > 0;
        REQUIRE(r.indices.size() == r.updated_stages);
        REQUIRE(r.bit_cost == feedback_header_bits(15) + 6 * static_cast<int>(r.updated_stages));
        REQUIRE(r.distortion >= 0.0);
        REQUIRE(r.distortion <= 1.0);
    }
    // A fresh isotropic input is far from the previous reconstruction, so every
    // instant updates; keeping the old first stage still succeeds when the new
    // input happens to lie close to it.
    CHECK(any >= 0.99 * n);
    CHECK(full >= n / 2);
}

TEST_CASE("receiver reconstructs the transmitter subspace", "[quantizer][selective]")
{
    for (auto [n, m] : {std::pair<Index, Index>{8, 1}, {6, 2}}) {
        const CodebookLadder tx_ladder = build_ladder(n, m, 5, 13);
        const CodebookLadder rx_ladder = build_ladder(n, m, 5, 13); // independently regenerated
        const DistortionModel dm =
            m == 1 ? theory_multi_stage(tx_ladder)
                   : DistortionModel::from_stage_values(n, m, 5, std::vector<double>(tx_ladder.stage_count(), 0.02));
        QuantizerState state(tx_ladder, Hysteresis{2.0, 1.5});
        FeedbackDecoder rx(rx_ladder);
        double worst = 0.0;
        std::size_t partial = 0, updates = 0;
        for (double nu : {0.001, 0.01, 0.05}) {
            const ChannelTrajectory ch = generate_gauss_markov(n, m, 400, nu, 14);
            for (const auto& h : ch.matrices) {
                const SubspaceBasis u = m == 1 ? SubspaceBasis::from_vector(h.col(0)) : compact_svd(h).u;
                const FeedbackRecord r = recursive_quantize_selective(u, state, dm);
                const SubspaceBasis& rec = rx.apply(r);
                worst = std::max(worst, chordal_distance(state.reconstruction(), rec));
                REQUIRE(std::abs(chordal_distance(u, rec) - r.distortion) <= 1e-9);
                if (r.updated_stages > 0) ++updates;
                if (r.updated_stages > 0 && r.updated_stages < tx_ladder.stage_count()) ++partial;
            }
        }
        INFO("n=" << n << " m=" << m << " updates=" << updates << " partial=" << partial);
        CHECK(worst <= 1e-9);
        CHECK(partial > 0);
    }
    const CodebookLadder ladder = build_ladder(4, 1, 3, 1);
    FeedbackDecoder rx(ladder);
    FeedbackRecord bad;
    bad.updated_stages = 1;
    bad.indices = {0};
    CHECK_THROWS_AS(rx.apply(bad), std::invalid_argument);
}

TEST_CASE("no-update instants respect the upper threshold", "[quantizer][selective]")
{
    const CodebookLadder ladder = build_ladder(8, 1, 6, 15);
    const DistortionModel dm = theory_multi_stage(ladder);
    const Hysteresis hy{2.0, 1.5};
    std::size_t quiet = 0;
    for (double nu : {1e-3, 1e-2}) {
        QuantizerState state(ladder, hy);
        const ChannelTrajectory ch = generate_gauss_markov(8, 1, 2000, nu, 16);
        for (const auto& h : ch.matrices) {
            const FeedbackRecord r = recursive_quantize_selective(SubspaceBasis::from_vector(h.col(0)), state, dm);
            if (r.updated_stages == 0) {
                ++quiet;
                REQUIRE(r.distortion <= hy.upper * dm.total);
            }
        }
    }
    CHECK(quiet > 1000);
}

TEST_CASE("degenerate rebuild forces a full update", "[quantizer][selective]")
{
    const CodebookLadder ladder = build_ladder(4, 1, 4, 17);
    const DistortionModel dm = theory_multi_stage(ladder);
    QuantizerState state(ladder, Hysteresis{});
    CounterRng rng(17);
    recursive_quantize_selective(random_semiunitary(4, 1, rng), state, dm);
    // The first stage's complement vector is orthogonal to the whole first
    // stage subspace, so rebuilding with the old stage matrix is rank deficient.
    const ComplexVector q = ladder.stages[0].complements.col(static_cast<Index>(state.indices()[0]));
    const FeedbackRecord r = recursive_quantize_selective(SubspaceBasis::from_vector(q), state, dm);
    CHECK(r.updated_stages == ladder.stage_count());
    CHECK(state.reconstruction().orthonormality_error() <= 1e-9);
}

TEST_CASE("single-stage selective update", "[quantizer][single]")
{
    const FlatCodebook cb = build_flat_codebook(3, 1, 4, 18);
    const double expected = exact_single_stage_m1(3, 4);
    CounterRng rng(18);

    SingleStageState never(1e300);
    int updates = 0;
    for (int k = 0; k < 200; ++k) updates += single_stage_selective(random_semiunitary(3, 1, rng), never, cb, expected).updated_stages;
    CHECK(updates == 1);

    SingleStageState still(2.0);
    const SubspaceBasis u = random_semiunitary(3, 1, rng);
    updates = 0;
    for (int k = 0; k < 100; ++k) {
        const FeedbackRecord r = single_stage_selective(u, still, cb, expected);
        updates += r.updated_stages;
        REQUIRE(r.bit_cost == (r.updated_stages ? 1 + 4 : 1));
    }
    CHECK(updates == 1);

    // Memoryless inputs: the update fraction equals P(d(U, Q) > c_u * expected)
    // for an isotropic U and an independent codebook entry Q.
    for (double cu : {1.0, 3.0}) {
        SingleStageState st(cu);
        const int n = 20000;
        int up = 0;
        for (int k = 0; k < n; ++k) up += single_stage_selective(random_semiunitary(3, 1, rng), st, cb, expected).updated_stages;
        int above = 0;
        for (int k = 0; k < n; ++k) {
            const SubspaceBasis q = cb.entries[rng.below(cb.size())];
            above += chordal_distance(random_semiunitary(3, 1, rng), q) > cu * expected;
        }
        INFO("c_u=" << cu);
        CHECK(std::abs(static_cast<double>(up - 1) / (n - 1) - static_cast<double>(above) / n) <= 0.05);
    }
}
