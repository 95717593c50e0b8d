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

#include "bnnsca/common.hpp"

#include <cmath>
#include <numbers>

namespace bnnsca {

double Xoshiro256::normal() {
    // 1 - u keeps the logarithm argument in (0, 1].
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::string_view to_string(PrngMode mode) { return mode == PrngMode::On ? "on" : "off"; }

PrngMode prng_mode_from_string(std::string_view text) {
    if (text == "on")
        return PrngMode::On;
    if (text == "off")
        return PrngMode::Off;
    throw ContractViolation("prng mode must be 'on' or 'off'");
}

std::uint64_t MaskStream::draw_bits(unsigned n) {
    expects(n >= 1 && n <= 64, "draw_bits: bit count out of [1, 64]");
    ++draws_;
    const std::uint64_t raw = gen_.next();
    if (mode_ == PrngMode::Off)
        return 0;
    return n == 64 ? raw : raw >> (64 - n);
}

std::int64_t MaskStream::draw_signed(unsigned width) {
    expects(width >= 1 && width <= 64, "draw_signed: width out of [1, 64]");
    return from_bits(draw_bits(width), width);
}

} // namespace bnnsca
