/*
 * SPDX-FileCopyrightText: <text>Copyright 2026 The bnnsca Authors</text>
 * SPDX-License-Identifier: Apache-2.0
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
 * This file is part of bnnsca, a side-channel workbench for binarized
 * neural network accelerators.
 */

#include "bnnsca/randomness.hpp"
#include "bnnsca/stats.hpp"

#include <benchmark/benchmark.h>

using namespace bnnsca;

// One stage-2 sweep: 196 registers x 16 guesses against a two-sample window.
static void BM_AccumulatorAdd(benchmark::State &state) {
    const std::size_t guesses = std::size_t(state.range(0)), samples = 2;
    Xoshiro256 rng(1);
    std::vector<double> h(guesses);
    for (auto &v : h)
        v = double(rng.below(12));
    const std::vector<float> x{3.0f, -1.5f};
    CorrelationAccumulator acc(guesses, samples);
    for (auto _ : state) {
        acc.add(h, x);
        benchmark::ClobberMemory();
    }
    state.SetItemsProcessed(state.iterations() * std::int64_t(guesses * samples));
}
BENCHMARK(BM_AccumulatorAdd)->Arg(16)->Arg(3136);

static void BM_Correlate(benchmark::State &state) {
    const std::size_t n = std::size_t(state.range(0)), guesses = 256, samples = 2;
    Xoshiro256 rng(2);
    std::vector<float> traces(n * samples);
    for (auto &v : traces)
        v = float(rng.normal());
    const auto cps = fractional_checkpoints(n);
    for (auto _ : state) {
        auto s = correlate(traces, n, samples, guesses,
                           [](std::size_t i, std::span<double> out) {
                               for (std::size_t g = 0; g < out.size(); ++g)
                                   out[g] = double((i * 7 + g) % 13);
                           },
                           cps, 1);
        benchmark::DoNotOptimize(s.rho.data());
    }
    state.SetItemsProcessed(state.iterations() * std::int64_t(n));
}
BENCHMARK(BM_Correlate)->Arg(4096)->Arg(32768)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
