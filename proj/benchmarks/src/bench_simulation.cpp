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

#include "bnnsca/datapath.hpp"
#include "bnnsca/leakage.hpp"

#include <benchmark/benchmark.h>

using namespace bnnsca;

namespace {

void window_trace(benchmark::State &state, Variant variant, const char *glob) {
    const Accelerator acc(generate_model(1), variant);
    const auto c = acc.tree_cycle(0, variant == Variant::Masked ? Phase::Masked : Phase::Single, 0, 2);
    LeakageModel lm;
    lm.include = {glob};
    const auto interest = acc.registers().select(lm.include);
    std::uint64_t i = 0;
    for (auto _ : state) {
        const auto img = generate_image(++i);
        LeakageSink sink(acc.registers(), lm);
        acc.simulate(img, i, PrngMode::On, {c, c + 2}, interest, sink);
        benchmark::DoNotOptimize(sink.samples().data());
    }
    state.SetItemsProcessed(state.iterations());
}

} // namespace

static void BM_WindowUnmasked(benchmark::State &state) { window_trace(state, Variant::Unmasked, "tree.s2.*"); }
BENCHMARK(BM_WindowUnmasked)->Unit(benchmark::kMicrosecond);

static void BM_WindowMasked(benchmark::State &state) { window_trace(state, Variant::Masked, "tree.s2.*"); }
BENCHMARK(BM_WindowMasked)->Unit(benchmark::kMicrosecond);

static void BM_FullInference(benchmark::State &state) {
    const auto model = generate_model(1);
    const auto img = generate_image(1);
    const bool masked = state.range(0) != 0;
    std::uint64_t i = 0;
    for (auto _ : state) {
        auto r = masked ? run_masked(model, img, MaskStream(++i, PrngMode::On)) : run_unmasked(model, img);
        benchmark::DoNotOptimize(r.result.label);
    }
}
BENCHMARK(BM_FullInference)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
