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

#include "bnnsca/attack.hpp"
#include "bnnsca/campaign.hpp"
#include "bnnsca/common.hpp"
#include "bnnsca/randomness.hpp"

#include <gtest/gtest.h>

using namespace bnnsca;

namespace {

// Traces whose single sample is f(image) plus Gaussian noise.
template <class F> TraceSet synthetic(std::size_t n, std::size_t width, double sigma, std::uint64_t seed, F f) {
    TraceSet ts;
    ts.n_traces = n;
    ts.n_samples = 1;
    Xoshiro256 rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        auto img = generate_image(seed * 1000003 + i, width);
        ts.samples.push_back(float(f(img) + sigma * rng.normal()));
        ts.inputs.push_back(std::move(img));
    }
    return ts;
}

InputImage pixels(std::vector<std::uint8_t> p) {
    InputImage img;
    img.pixels = std::move(p);
    return img;
}

} // namespace

TEST(TreeHypothesis, PairSumExample) {
    const TreeHypothesis h(Variant::Unmasked, 1, 0, 2);
    const auto img = pixels({5, 3});
    EXPECT_EQ(h.value(0b11, img.pixels), 8);
    EXPECT_EQ(h.value(0b01, img.pixels), 2);
    EXPECT_EQ(h.value(0b00, img.pixels), -8);
    EXPECT_EQ(hypothesis_hd(h, 0b11, img), 1u); // 0 -> 0b0000001000
    std::vector<double> out(4);
    h.predict(img, out);
    EXPECT_EQ(out[3], 1.0);
    EXPECT_EQ(out[0], double(hamming_weight(to_bits(-8, 10))));
    EXPECT_EQ(h.guesses(), 4u);
    EXPECT_EQ(h.label(0b01), "10");
}

TEST(TreeHypothesis, InverseNegates) {
    const TreeHypothesis h(Variant::Masked, 2, 3, 784);
    const auto img = generate_image(1);
    EXPECT_EQ(h.leak_bits(), 10u);
    for (std::size_t g = 0; g < h.guesses(); ++g) {
        ASSERT_EQ(h.inverse(h.inverse(g)), g);
        ASSERT_EQ(h.value(h.guess_bits(h.inverse(g)), img.pixels), -h.value(h.guess_bits(g), img.pixels));
    }
    const TreeHypothesis sub(Variant::Unmasked, 2, 0, std::vector<std::uint64_t>{0b0011, 0b1100, 0b0101});
    EXPECT_EQ(sub.inverse(0), 1u);
    EXPECT_EQ(sub.inverse(2), HypothesisSpace::npos);
    EXPECT_THROW(TreeHypothesis(Variant::Unmasked, 4, 0), ContractViolation);
    EXPECT_THROW(TreeHypothesis(Variant::Unmasked, 2, 196), ContractViolation);
}

TEST(TreeHypothesis, AgreesWithDatapath) {
    // the prediction of the true guess equals the simulated load's HD
    const auto model = generate_model(3);
    const Accelerator acc(model, Variant::Unmasked);
    for (unsigned stage = 1; stage <= 3; ++stage) {
        const std::size_t reg = 5;
        TreeHypothesis h(Variant::Unmasked, stage, reg);
        h.set_previous(true_tree_guess(model, 0, stage, reg));
        const auto truth = true_tree_guess(model, 1, stage, reg);
        const auto name = "tree.s" + std::to_string(stage) + ".r" + std::to_string(reg);
        const auto id = *acc.registers().find(name);
        std::vector<std::uint8_t> interest(acc.registers().size(), 0);
        interest[id] = 1;
        const auto c = acc.tree_cycle(0, Phase::Single, 1, stage);
        for (std::uint64_t i = 0; i < 100; ++i) {
            const auto img = generate_image(500 + i);
            CycleTrace t;
            acc.simulate(img, 0, PrngMode::Off, {c, c + 1}, interest, t);
            ASSERT_EQ(t.loads(0).size(), 1u);
            const auto &ld = t.loads(0)[0];
            std::vector<double> out(h.guesses());
            h.predict(img, out);
            ASSERT_EQ(out[truth], double(hamming_distance(ld.prev, ld.curr)));
        }
    }
}

TEST(Cpa, SelfCorrelationIsOne) {
    const TreeHypothesis h(Variant::Unmasked, 1, 0, 784);
    auto ts = synthetic(400, 784, 0.0, 1, [&](const InputImage &img) {
        std::vector<double> out(4);
        h.predict(img, out);
        return out[2];
    });
    const auto r = cpa_first_order(ts, h);
    EXPECT_EQ(h.guess_bits(r.best_guess), 2u);
    EXPECT_NEAR(r.peak_rho, 1.0, 1e-6);
    EXPECT_TRUE(r.crossing.has_value());
}

TEST(Cpa, ConstantTraceIsDegenerate) {
    const TreeHypothesis h(Variant::Unmasked, 1, 0, 784);
    auto ts = synthetic(100, 784, 0.0, 2, [](const InputImage &) { return 3.0; });
    const auto r = cpa_first_order(ts, h);
    EXPECT_EQ(r.peak_rho, 0.0);
    EXPECT_TRUE(r.surface.degenerate[0]);
    EXPECT_FALSE(r.crossing.has_value());
    EXPECT_EQ(r.guesses_over_threshold, 0u);
}

TEST(Cpa, SecondOrderFindsVarianceLeak) {
    // the sample's spread, not its mean, depends on the target bit
    Xoshiro256 rng(9);
    const TreeHypothesis h(Variant::Unmasked, 1, 0, 784);
    auto ts = synthetic(6000, 784, 0.0, 3, [&](const InputImage &img) {
        std::vector<double> out(4);
        h.predict(img, out);
        return (out[1] - 4.5) * (rng.below(2) ? 1.0 : -1.0);
    });
    EXPECT_FALSE(cpa_first_order(ts, h).crossing.has_value());
    const auto r = cpa_second_order(ts, h);
    EXPECT_TRUE(r.crossing.has_value());
}

TEST(RecoverWeights, UnmaskedCampaign) {
    CampaignConfig c;
    c.n_traces = 10000;
    c.include = {"tree.s2.*", "tree.s3.*"};
    c.threads = 1;
    const auto model = campaign_model(c);
    const auto ts = simulate_campaign(c, model);
    AttackOptions opt;
    opt.target_sample = 0;
    const auto rec = recover_weights(ts, Variant::Unmasked, {}, opt);
    ASSERT_EQ(rec.groups.size(), 196u);
    std::size_t exact = 0;
    for (const auto &g : rec.groups) {
        const auto truth = true_tree_guess(model, 0, 2, g.reg);
        if (g.crossing && g.chosen == truth)
            ++exact;
        if (g.crossing) {
            EXPECT_TRUE(g.best == truth || g.inverse == truth) << g.reg;
        }
    }
    EXPECT_GE(double(exact) / 196.0, 0.9);
    std::size_t right = 0;
    for (std::size_t i = 0; i < 784; ++i)
        right += rec.weights[i] && *rec.weights[i] == (model.layer(0).weight(0, i) != 0);
    EXPECT_GE(right, std::size_t(0.9 * 784));
}

TEST(RecoverBias, HammingWeightIsExact) {
    const auto model = generate_model(4);
    const auto w = model.layer(0).weights(0);
    std::vector<std::uint8_t> wv(w.begin(), w.end());
    const std::int32_t b = model.layer(0).bias(0);
    const BiasCandidates all(wv, b - 40, b + 40);
    auto ts = synthetic(3000, 784, 1.0, 5, [&](const InputImage &img) {
        return double(hamming_weight(to_bits(all.partial_sum(img) + b, 19)));
    });
    const auto est = recover_bias(ts, all, BiasMode::HammingWeight, 19);
    EXPECT_TRUE(est.conclusive);
    EXPECT_EQ(est.value, b);

    for (std::int32_t off : {1, 10, 100, -60}) {
        const BiasCandidates beside(wv, b + off, b + off + 40);
        const auto e = recover_bias(ts, beside, BiasMode::HammingWeight, 19);
        EXPECT_FALSE(e.conclusive) << off;
    }
}

TEST(RecoverBias, SignGivesInterval) {
    const auto model = generate_model(4);
    const auto w = model.layer(0).weights(0);
    std::vector<std::uint8_t> wv(w.begin(), w.end());
    const std::int32_t b = model.layer(0).bias(0);
    const BiasCandidates cand(wv, b - 3000, b + 3000);
    auto ts = synthetic(4000, 784, 0.5, 6, [&](const InputImage &img) {
        return double(sign_activation(cand.partial_sum(img) + b));
    });
    const auto est = recover_bias(ts, cand, BiasMode::Sign, 19);
    EXPECT_LE(est.lo, b);
    EXPECT_GE(est.hi, b);
    EXPECT_LT(est.hi - est.lo, 6000);
    EXPECT_TRUE(est.conclusive);
}
