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

#include "bnnsca/leakage.hpp"
#include "bnnsca/randomness.hpp"

#include <benchmark/benchmark.h>

using namespace bnnsca;

static void BM_SinkLoads(benchmark::State &state) {
    RegisterMap map;
    for (int i = 0; i < 196; ++i)
        map.add("tree.s2.r" + std::to_string(i), 11, 10);
    LeakageModel lm;
    lm.epsilon = 0.3;
    Xoshiro256 rng(3);
    std::vector<std::uint64_t> vals(map.size());
    for (auto &v : vals)
        v = rng.next() & 0x3ff;
    for (auto _ : state) {
        LeakageSink sink(map, lm);
        sink.begin_cycle(0);
        for (std::uint32_t r = 0; r < map.size(); ++r)
            sink.load(r, vals[r], vals[(r + 1) % vals.size()]);
        benchmark::DoNotOptimize(sink.samples().data());
    }
    state.SetItemsProcessed(state.iterations() * std::int64_t(map.size()));
}
BENCHMARK(BM_SinkLoads);

static void BM_Noise(benchmark::State &state) {
    std::vector<double> s(std::size_t(state.range(0)), 0.0);
    std::uint64_t seed = 0;
    for (auto _ : state) {
        add_noise(s, 4.0, ++seed);
        benchmark::DoNotOptimize(s.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Noise)->Arg(2)->Arg(6713);

BENCHMARK_MAIN();
