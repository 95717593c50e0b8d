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

#include "bnnsca/common.hpp"
#include "bnnsca/randomness.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>

using namespace bnnsca;

TEST(SplitMix, KnownAnswer) {
    std::uint64_t s = 0;
    EXPECT_EQ(splitmix64(s), 0xe220a8397b1dcdafull);
    EXPECT_EQ(splitmix64(s), 0x6e789e6aa1b965f4ull);
}

TEST(Seeds, SitesGiveDistinctStreams) {
    std::set<std::uint64_t> seen;
    for (std::uint32_t i = 0; i < 1000; ++i) {
        seen.insert(derive_seed(7, site_id(SiteKind::SignChain, 0, i)));
        seen.insert(derive_seed(7, site_id(SiteKind::B2a, 1, i)));
    }
    EXPECT_EQ(seen.size(), 2000u);
    EXPECT_NE(site_id(SiteKind::B2a, 1, 0), site_id(SiteKind::B2a, 0, 1));
}

TEST(Xoshiro, Deterministic) {
    Xoshiro256 a(42), b(42);
    for (int i = 0; i < 100; ++i) {
        EXPECT_EQ(a.next(), b.next());
    }
    EXPECT_NE(Xoshiro256(42).next(), Xoshiro256(43).next());
}

TEST(Xoshiro, BelowAndUniformRanges) {
    Xoshiro256 g(1);
    std::vector<int> hist(7, 0);
    for (int i = 0; i < 70000; ++i) {
        const auto v = g.below(7);
        ASSERT_LT(v, 7u);
        ++hist[v];
        const double u = g.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
    }
    for (int h : hist)
        EXPECT_NEAR(h, 10000, 500);
}

TEST(Xoshiro, NormalMoments) {
    Xoshiro256 g(9);
    double s = 0, s2 = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double v = g.normal();
        s += v;
        s2 += v * v;
    }
    EXPECT_NEAR(s / n, 0.0, 0.01);
    EXPECT_NEAR(s2 / n, 1.0, 0.02);
}

TEST(MaskStream, OffDrawsZeroButCounts) {
    MaskStream m(5, PrngMode::Off);
    for (int i = 0; i < 10; ++i)
        EXPECT_EQ(m.draw_bits(8), 0u);
    EXPECT_EQ(m.draw_signed(2), 0);
    EXPECT_EQ(m.draws(), 11u);
}

TEST(MaskStream, OnDrawsFitWidth) {
    MaskStream m(5, PrngMode::On);
    std::set<std::int64_t> seen;
    for (int i = 0; i < 1000; ++i) {
        ASSERT_LT(m.draw_bits(3), 8u);
        const auto s = m.draw_signed(2);
        ASSERT_GE(s, -2);
        ASSERT_LE(s, 1);
        seen.insert(s);
    }
    EXPECT_EQ(seen.size(), 4u);
    EXPECT_THROW(m.draw_bits(0), ContractViolation);
    EXPECT_THROW(m.draw_bits(65), ContractViolation);
}

TEST(MaskStream, ForkIsReproducibleAndModeAware) {
    const MaskStream root(11, PrngMode::On);
    auto a = root.fork(site_id(SiteKind::InputSplit, 0, 0));
    auto b = root.fork(site_id(SiteKind::InputSplit, 0, 0));
    auto c = root.fork(site_id(SiteKind::InputSplit, 0, 1));
    EXPECT_EQ(a.draw_bits(64), b.draw_bits(64));
    EXPECT_NE(a.draw_bits(64), c.draw_bits(64));
    EXPECT_EQ(MaskStream(11, PrngMode::Off).fork(3).mode(), PrngMode::Off);
}

TEST(PrngMode, StringRoundTrip) {
    EXPECT_EQ(prng_mode_from_string(to_string(PrngMode::On)), PrngMode::On);
    EXPECT_EQ(prng_mode_from_string(to_string(PrngMode::Off)), PrngMode::Off);
    EXPECT_THROW(prng_mode_from_string("maybe"), ContractViolation);
}
