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

#include <benchmark/benchmark.h>

#include "grassq/classifier.hpp"
#include "grassq/codebook.hpp"
#include "grassq/quantizer.hpp"

using namespace grassq;

namespace {

void BM_StageSelect(benchmark::State& state)
{
    const auto d = static_cast<Index>(state.range(0));
    const auto bits = static_cast<int>(state.range(1));
    const StageCodebook sc = build_stage_codebook(d, bits, 1);
    CounterRng rng(2);
    const SubspaceBasis b = random_semiunitary(d, 1, rng);
    for (auto _ : state) benchmark::DoNotOptimize(stage_select(b, sc));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(sc.size()));
}
BENCHMARK(BM_StageSelect)->Args({8, 6})->Args({32, 6})->Args({32, 10});

void BM_RecursiveFull(benchmark::State& state)
{
    const auto n = static_cast<Index>(state.range(0));
    const auto m = static_cast<Index>(state.range(1));
    const CodebookLadder ladder = build_ladder(n, m, 6, 3);
    CounterRng rng(4);
    const SubspaceBasis u = random_semiunitary(n, m, rng);
    for (auto _ : state) benchmark::DoNotOptimize(recursive_quantize_full(u, ladder));
}
BENCHMARK(BM_RecursiveFull)->Args({8, 1})->Args({16, 1})->Args({32, 1})->Args({6, 2});

void BM_RecursiveSelective(benchmark::State& state)
{
    const CodebookLadder ladder = build_ladder(16, 1, 6, 5);
    const DistortionModel dm = theory_multi_stage(ladder);
    QuantizerState qs(ladder, Hysteresis{});
    CounterRng rng(6);
    std::vector<SubspaceBasis> inputs;
    for (int i = 0; i < 64; ++i) inputs.push_back(random_semiunitary(16, 1, rng));
    std::size_t k = 0;
    for (auto _ : state) benchmark::DoNotOptimize(recursive_quantize_selective(inputs[k++ % inputs.size()], qs, dm));
}
BENCHMARK(BM_RecursiveSelective);

void BM_Classify(benchmark::State& state)
{
    const auto d = static_cast<Index>(state.range(0));
    const StageNetwork net(NetworkBinding{d, 1, 6, 7}, 8);
    CounterRng rng(9);
    const SubspaceBasis b = random_semiunitary(d, 1, rng);
    for (auto _ : state) benchmark::DoNotOptimize(classify(net, b));
}
BENCHMARK(BM_Classify)->Arg(8)->Arg(16)->Arg(32);

void BM_ChordalDistance(benchmark::State& state)
{
    CounterRng rng(10);
    const SubspaceBasis u = random_semiunitary(32, 2, rng);
    const SubspaceBasis q = random_semiunitary(32, 2, rng);
    for (auto _ : state) benchmark::DoNotOptimize(chordal_distance(u, q));
}
BENCHMARK(BM_ChordalDistance);

} // namespace

BENCHMARK_MAIN();
