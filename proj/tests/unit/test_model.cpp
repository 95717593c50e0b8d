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
#include "bnnsca/io.hpp"
#include "bnnsca/model.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

using namespace bnnsca;
namespace fs = std::filesystem;

namespace {

// Straight-line forward pass written against the accessors only.
std::vector<std::int64_t> oracle_scores(const BnnModel &m, const InputImage &img) {
    std::vector<std::int64_t> x(img.pixels.begin(), img.pixels.end());
    for (std::size_t l = 0; l < m.num_layers(); ++l) {
        const auto &layer = m.layer(l);
        std::vector<std::int64_t> y(layer.fan_out());
        for (std::size_t j = 0; j < layer.fan_out(); ++j) {
            std::int64_t s = layer.bias(j);
            for (std::size_t i = 0; i < layer.fan_in(); ++i)
                s += layer.weight(j, i) ? x[i] : -x[i];
            y[j] = s;
        }
        if (l + 1 < m.num_layers())
            for (auto &v : y)
                v = v > 0 ? 1 : -1;
        x = y;
    }
    return x;
}

fs::path temp_file(const char *name) { return fs::temp_directory_path() / (std::string("bnnsca_model_") + name); }

} // namespace

TEST(WeightedSum, Basic) {
    const std::int64_t in[] = {5, 3, 7};
    const std::uint8_t w[] = {1, 0, 1};
    EXPECT_EQ(weighted_sum(in, w, -2), 5 - 3 + 7 - 2);
    const std::uint8_t short_w[] = {1, 0};
    EXPECT_THROW(weighted_sum(in, short_w, 0), ContractViolation);
}

TEST(SignActivation, ZeroMapsToMinusOne) {
    EXPECT_EQ(sign_activation(1), 1);
    EXPECT_EQ(sign_activation(0), 0);
    EXPECT_EQ(sign_activation(-5), 0);
}

TEST(Argmax, LowestIndexOnTies) {
    const std::int64_t s[] = {3, 9, 9, -1};
    EXPECT_EQ(argmax_lowest(s), 1);
    const std::int64_t all[] = {4, 4, 4};
    EXPECT_EQ(argmax_lowest(all), 0);
}

TEST(Model, BiasMustFitSixteenBits) {
    BnnModel m({4, 2});
    EXPECT_NO_THROW(m.layer(0).set_bias(0, -32768));
    EXPECT_NO_THROW(m.layer(0).set_bias(1, 32767));
    EXPECT_THROW(m.layer(0).set_bias(0, 32768), ContractViolation);
    EXPECT_THROW(BnnModel({4}), ContractViolation);
}

TEST(Model, ReferenceMatchesOracle) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto m = generate_model(seed, {64, 32, 32, 10});
        for (std::uint64_t i = 0; i < 10; ++i) {
            const auto img = generate_image(seed * 100 + i, 64);
            const auto r = infer_reference(m, img);
            const auto want = oracle_scores(m, img);
            EXPECT_EQ(r.scores, want);
            EXPECT_EQ(r.label, argmax_lowest(want));
        }
    }
}

TEST(Model, ReferenceRecordsHiddenSums) {
    const auto m = generate_model(3, {16, 8, 4});
    const auto img = generate_image(4, 16);
    const auto p = forward_reference(m, img);
    ASSERT_EQ(p.sums.size(), 2u);
    ASSERT_EQ(p.activations.size(), 1u);
    for (std::size_t j = 0; j < 8; ++j)
        EXPECT_EQ(p.activations[0][j], p.sums[0][j] > 0 ? 1 : 0);
    EXPECT_EQ(p.result.scores, p.sums[1]);
}

TEST(Model, GenerationIsDeterministic) {
    EXPECT_EQ(generate_model(7, {32, 16, 4}), generate_model(7, {32, 16, 4}));
    EXPECT_NE(generate_model(7, {32, 16, 4}), generate_model(8, {32, 16, 4}));
    EXPECT_EQ(generate_image(3), generate_image(3));
    const auto m = generate_model(1);
    for (std::size_t j = 0; j < m.layer(0).fan_out(); ++j)
        EXPECT_LE(std::abs(m.layer(0).bias(j)), 1024);
}

TEST(ModelFile, HandWrittenLayout) {
    // 3 inputs, 2 outputs: bit (r, c) at r * 2 + c
    BnnModel m({3, 2});
    m.layer(0).set_weight(0, 0, true); // r0 c0 -> bit 0
    m.layer(0).set_weight(1, 2, true); // r2 c1 -> bit 5
    m.layer(0).set_bias(0, -2);
    m.layer(0).set_bias(1, 258);
    const std::vector<std::uint8_t> want{'B', 'N', 'N', 'M', 1, 0, 1, 0, 3, 0, 0, 0, 2, 0, 0, 0,
                                         0x21, 0xfe, 0xff, 0x02, 0x01};
    EXPECT_EQ(serialize_model(m), want);
    EXPECT_EQ(deserialize_model(want), m);
}

TEST(ModelFile, RoundTripIsBitExact) {
    const auto m = generate_model(12);
    const auto p = temp_file("rt.bnnm");
    save_model(m, p);
    const auto back = load_model(p);
    EXPECT_EQ(back, m);
    EXPECT_EQ(serialize_model(back), io::read_file(p));
    fs::remove(p);
}

TEST(ModelFile, RejectsDamage) {
    auto bytes = serialize_model(generate_model(2, {8, 4, 2}));
    auto bad_magic = bytes;
    bad_magic[0] = 'X';
    EXPECT_THROW(deserialize_model(bad_magic), FormatError);
    auto bad_version = bytes;
    bad_version[4] = 9;
    EXPECT_THROW(deserialize_model(bad_version), FormatError);
    auto truncated = bytes;
    truncated.pop_back();
    EXPECT_THROW(deserialize_model(truncated), FormatError);
    auto trailing = bytes;
    trailing.push_back(0);
    EXPECT_THROW(deserialize_model(trailing), FormatError);
    auto chain = bytes;
    // second layer fan-in: header 8 + first layer (8 + 4 + 8) bytes, then rows
    chain[8 + 8 + 4 + 8] = 5;
    EXPECT_THROW(deserialize_model(chain), FormatError);
}

TEST(ModelFile, MissingFileIsIoError) {
    EXPECT_THROW(load_model("/nonexistent/dir/model.bnnm"), IoError);
}

TEST(ModelHash, DistinctSeedsDistinctHashes) {
    std::set<std::uint64_t> h;
    for (std::uint64_t s = 1; s <= 20; ++s)
        h.insert(model_hash(generate_model(s, {64, 16, 10})));
    EXPECT_EQ(h.size(), 20u);
    EXPECT_EQ(model_hash(generate_model(1, {64, 16, 10})), model_hash(generate_model(1, {64, 16, 10})));
}

TEST(Image, RawAndTextForms) {
    const auto raw = temp_file("img.raw");
    const auto txt = temp_file("img.csv");
    InputImage img;
    img.pixels = {0, 1, 255, 17};
    save_image(img, raw);
    EXPECT_EQ(load_image(raw, 4), img);
    std::ofstream(txt) << "0, 1,255\n17\n";
    EXPECT_EQ(load_image(txt, 4), img);
    std::ofstream(txt) << "0 1 256 17";
    EXPECT_THROW(load_image(txt, 4), FormatError);
    std::ofstream(txt) << "0 1 2";
    EXPECT_THROW(load_image(txt, 4), FormatError);
    fs::remove(raw);
    fs::remove(txt);
}
