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

#pragma once

#include "bnnsca/randomness.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace bnnsca {

/// x = mask + masked.
struct ArithmeticSharePair {
    std::int64_t mask = 0;
    std::int64_t masked = 0;

    std::int64_t value() const { return mask + masked; }
    bool operator==(const ArithmeticSharePair &) const = default;
};

/// x = share1 ^ share2.
struct BooleanSharePair {
    std::uint8_t share1 = 0;
    std::uint8_t share2 = 0;

    std::uint8_t value() const { return share1 ^ share2; }
    bool operator==(const BooleanSharePair &) const = default;
};

/// Pixels are masked with unsigned 8-bit randoms, so x - r needs 9 bits.
inline constexpr unsigned kPixelMaskBits = 8;

ArithmeticSharePair split_value(std::int64_t x, std::int64_t r);

/// One fresh unsigned `mask_bits`-bit random per value.
std::vector<ArithmeticSharePair> mask_inputs(std::span<const std::int64_t> values, MaskStream &stream,
                                             unsigned mask_bits = kPixelMaskBits);

// ---------------------------------------------------------------------------
// Dual-rail precharge logic

enum class RailPhase : std::uint8_t { Precharge, Evaluate };

struct DualRailBit {
    std::uint8_t t = 0; ///< true rail
    std::uint8_t f = 0; ///< false rail
    RailPhase phase = RailPhase::Precharge;

    static DualRailBit precharged() { return {}; }
    static DualRailBit evaluate(bool v) { return {std::uint8_t(v), std::uint8_t(!v), RailPhase::Evaluate}; }

    bool value() const { return t != 0; }
    /// Precharge: both rails low. Evaluate: exactly one rail high.
    bool well_formed() const { return phase == RailPhase::Precharge ? (t == 0 && f == 0) : (t ^ f) == 1; }
    /// Inversion costs nothing in dual-rail logic: the rails swap.
    DualRailBit inverted() const { return {f, t, phase}; }

    bool operator==(const DualRailBit &) const = default;
};

DualRailBit wddl_nand(DualRailBit a, DualRailBit b);
DualRailBit wddl_and(DualRailBit a, DualRailBit b);
DualRailBit wddl_nand3(DualRailBit a, DualRailBit b, DualRailBit c);
DualRailBit wddl_nand4(DualRailBit a, DualRailBit b, DualRailBit c, DualRailBit d);

/// s = a7 ^ b7 ^ c as the four-term NAND network, evaluated on dual-rail inputs.
DualRailBit wddl_msb(DualRailBit a7, DualRailBit b7, DualRailBit c);

struct MsbAdderResult {
    std::int64_t sum = 0;             ///< a + b, operand_bits + 1 wide
    std::uint8_t msb = 0;             ///< sign bit of sum, from the NAND network
    std::uint8_t msb_complement = 1;  ///< false rail of the same network
    DualRailBit precharge;            ///< network output during the precharge half
    DualRailBit evaluate;             ///< network output during evaluation
};

/// Adds two operand_bits-wide signed values. The low bits go through an
/// ordinary adder that produces the carry c; the sign bit of the result comes
/// from wddl_msb after a precharge wave.
MsbAdderResult wddl_msb_adder(std::int64_t a, std::int64_t b, unsigned operand_bits = 8);

// ---------------------------------------------------------------------------
// Masked sign function: a ripple of LUTs, each output registered.

/// Registered output pair of one chain LUT: (rho, rho ^ carry).
struct ChainStage {
    std::uint8_t r = 0;
    std::uint8_t c = 0;
    bool operator==(const ChainStage &) const = default;
};

/// lut0: three inputs, carry out of bit 0.
ChainStage chain_lut_first(std::uint8_t a0, std::uint8_t b0, std::uint8_t rho);
/// lut k: five inputs, carry out of bit k given the masked carry into it.
ChainStage chain_lut_carry(std::uint8_t ak, std::uint8_t bk, ChainStage in, std::uint8_t rho);
/// Last LUT: masked complement of the top sum bit.
ChainStage chain_lut_sign(std::uint8_t ak, std::uint8_t bk, ChainStage in, std::uint8_t rho);

struct ChainResult {
    BooleanSharePair out;            ///< share1 ^ share2 = [s1 + s2 > 0]
    std::vector<ChainStage> stages;  ///< width entries, lut0 first
};

/// Evaluates [s1 + s2 > 0] on width-bit shares without forming s1 + s2.
/// The chain adds s1 and s2 - 1 and returns the complement of the sign bit.
/// Bit k-1 of `rho` is the random of lut k-1. Requires 2 <= width <= 64.
ChainResult masked_sign_chain(std::int64_t s1, std::int64_t s2, unsigned width, std::uint64_t rho);
ChainResult masked_sign_chain(std::int64_t s1, std::int64_t s2, unsigned width, MaskStream &stream);

/// XNOR with the weight on share1 only.
BooleanSharePair xnor_one_share(BooleanSharePair a, std::uint8_t w);

/// Range of the B2A random: 2-bit two's complement.
inline constexpr unsigned kB2aMaskBits = 2;
/// Masked output of the B2A LUT: 4-bit two's complement.
inline constexpr unsigned kB2aMaskedBits = 4;

/// Turns two weighted Boolean-shared activations into arithmetic shares of
/// their signed sum in {-2, 0, 2}: (r, sum - r), r in [-2, 1].
ArithmeticSharePair b2a_convert(BooleanSharePair p1, BooleanSharePair p2, std::int64_t r);
ArithmeticSharePair b2a_convert(BooleanSharePair p1, BooleanSharePair p2, MaskStream &stream);

struct CompareResult {
    std::uint8_t bit = 0; ///< 1 iff a >= b
    std::int64_t x = 0;   ///< a.mask - b.masked + 1, reduced to width bits
    std::int64_t y = 0;   ///< a.masked - b.mask, reduced to width bits
    ChainResult chain;
};

/// Compares two shared scores through the sign chain; only the final
/// comparison bit is recombined.
CompareResult masked_output_compare(ArithmeticSharePair a, ArithmeticSharePair b, unsigned width, std::uint64_t rho);
CompareResult masked_output_compare(ArithmeticSharePair a, ArithmeticSharePair b, unsigned width,
                                    MaskStream &stream);

} // namespace bnnsca
