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

#include "bnnsca/gadgets.hpp"

#include "bnnsca/common.hpp"

namespace bnnsca {

ArithmeticSharePair split_value(std::int64_t x, std::int64_t r) { return {r, x - r}; }

std::vector<ArithmeticSharePair> mask_inputs(std::span<const std::int64_t> values, MaskStream &stream,
                                             unsigned mask_bits) {
    std::vector<ArithmeticSharePair> out;
    out.reserve(values.size());
    for (std::int64_t x : values)
        out.push_back(split_value(x, static_cast<std::int64_t>(stream.draw_bits(mask_bits))));
    return out;
}

DualRailBit wddl_nand(DualRailBit a, DualRailBit b) {
    expects(a.phase == b.phase, "wddl_nand: operands in different phases");
    if (a.phase == RailPhase::Precharge)
        return DualRailBit::precharged();
    // both rails are positive gates: NAND(a, b) = OR of the false rails,
    // its complement = AND of the true rails
    return {std::uint8_t(a.f | b.f), std::uint8_t(a.t & b.t), RailPhase::Evaluate};
}

DualRailBit wddl_and(DualRailBit a, DualRailBit b) { return wddl_nand(a, b).inverted(); }

DualRailBit wddl_nand3(DualRailBit a, DualRailBit b, DualRailBit c) { return wddl_nand(wddl_and(a, b), c); }

DualRailBit wddl_nand4(DualRailBit a, DualRailBit b, DualRailBit c, DualRailBit d) {
    return wddl_nand(wddl_and(a, b), wddl_and(c, d));
}

DualRailBit wddl_msb(DualRailBit a, DualRailBit b, DualRailBit c) {
    const DualRailBit na = a.inverted(), nb = b.inverted(), nc = c.inverted();
    const DualRailBit t0 = wddl_nand3(na, b, nc);
    const DualRailBit t1 = wddl_nand3(a, nb, nc);
    const DualRailBit t2 = wddl_nand3(a, b, c);
    const DualRailBit t3 = wddl_nand3(na, nb, c);
    return wddl_nand4(t0, t1, t2, t3);
}

MsbAdderResult wddl_msb_adder(std::int64_t a, std::int64_t b, unsigned operand_bits) {
    expects(operand_bits >= 1 && operand_bits <= 62, "wddl_msb_adder: operand width out of range");
    const std::uint64_t ua = to_bits(a, operand_bits), ub = to_bits(b, operand_bits);
    const std::uint64_t low = ua + ub;
    const auto c = std::uint8_t((low >> operand_bits) & 1);
    const auto a7 = std::uint8_t((ua >> (operand_bits - 1)) & 1);
    const auto b7 = std::uint8_t((ub >> (operand_bits - 1)) & 1);

    MsbAdderResult r;
    r.precharge = wddl_msb(DualRailBit::precharged(), DualRailBit::precharged(), DualRailBit::precharged());
    r.evaluate = wddl_msb(DualRailBit::evaluate(a7), DualRailBit::evaluate(b7), DualRailBit::evaluate(c));
    r.msb = r.evaluate.t;
    r.msb_complement = r.evaluate.f;
    const std::uint64_t pattern = (low & ((std::uint64_t{1} << operand_bits) - 1)) | (std::uint64_t(r.msb) << operand_bits);
    r.sum = from_bits(pattern, operand_bits + 1);
    return r;
}

ChainStage chain_lut_first(std::uint8_t a0, std::uint8_t b0, std::uint8_t rho) {
    return {rho, std::uint8_t(rho ^ (a0 & b0))};
}

ChainStage chain_lut_carry(std::uint8_t ak, std::uint8_t bk, ChainStage in, std::uint8_t rho) {
    const std::uint8_t c = in.r ^ in.c;
    const std::uint8_t carry = (ak & bk) | (ak & c) | (bk & c);
    return {rho, std::uint8_t(rho ^ carry)};
}

ChainStage chain_lut_sign(std::uint8_t ak, std::uint8_t bk, ChainStage in, std::uint8_t rho) {
    const std::uint8_t c = in.r ^ in.c;
    const std::uint8_t positive = (ak ^ bk ^ c) ^ 1u;
    return {rho, std::uint8_t(rho ^ positive)};
}

ChainResult masked_sign_chain(std::int64_t s1, std::int64_t s2, unsigned width, std::uint64_t rho) {
    expects(width >= 2 && width <= 64, "masked_sign_chain: width out of [2, 64]");
    const std::uint64_t a = to_bits(s1, width);
    const std::uint64_t b = to_bits(s2 - 1, width);
    auto bit = [](std::uint64_t v, unsigned k) { return std::uint8_t((v >> k) & 1); };

    ChainResult res;
    res.stages.reserve(width);
    ChainStage st = chain_lut_first(bit(a, 0), bit(b, 0), bit(rho, 0));
    res.stages.push_back(st);
    for (unsigned k = 1; k + 1 < width; ++k) {
        st = chain_lut_carry(bit(a, k), bit(b, k), st, bit(rho, k));
        res.stages.push_back(st);
    }
    st = chain_lut_sign(bit(a, width - 1), bit(b, width - 1), st, bit(rho, width - 1));
    res.stages.push_back(st);
    res.out = {st.c, st.r};
    return res;
}

ChainResult masked_sign_chain(std::int64_t s1, std::int64_t s2, unsigned width, MaskStream &stream) {
    expects(width >= 2 && width <= 64, "masked_sign_chain: width out of [2, 64]");
    return masked_sign_chain(s1, s2, width, stream.draw_bits(width));
}

BooleanSharePair xnor_one_share(BooleanSharePair a, std::uint8_t w) {
    return {std::uint8_t((a.share1 ^ w ^ 1u) & 1u), a.share2};
}

ArithmeticSharePair b2a_convert(BooleanSharePair p1, BooleanSharePair p2, std::int64_t r) {
    expects(r >= -2 && r <= 1, "b2a_convert: random out of [-2, 1]");
    const std::int64_t sum = (2 * p1.value() - 1) + (2 * p2.value() - 1);
    return {r, sum - r};
}

ArithmeticSharePair b2a_convert(BooleanSharePair p1, BooleanSharePair p2, MaskStream &stream) {
    return b2a_convert(p1, p2, stream.draw_signed(kB2aMaskBits));
}

CompareResult masked_output_compare(ArithmeticSharePair a, ArithmeticSharePair b, unsigned width, std::uint64_t rho) {
    CompareResult r;
    r.x = from_bits(to_bits(a.mask - b.masked + 1, width), width);
    r.y = from_bits(to_bits(a.masked - b.mask, width), width);
    r.chain = masked_sign_chain(r.x, r.y, width, rho);
    r.bit = r.chain.out.value();
    return r;
}

CompareResult masked_output_compare(ArithmeticSharePair a, ArithmeticSharePair b, unsigned width,
                                    MaskStream &stream) {
    expects(width >= 2 && width <= 64, "masked_output_compare: width out of [2, 64]");
    return masked_output_compare(a, b, width, stream.draw_bits(width));
}

} // namespace bnnsca
