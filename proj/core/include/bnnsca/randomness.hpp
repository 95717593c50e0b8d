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

#include <array>
#include <cstdint>
#include <string_view>

namespace bnnsca {

/// SplitMix64 step (Steele, Lea, Flood). Used for seeding and seed derivation.
constexpr std::uint64_t splitmix64(std::uint64_t &state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Child seed for an independent stream: splitmix64 of (seed xor splitmix64(site)).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t site) {
    std::uint64_t s = site;
    std::uint64_t mixed = seed ^ splitmix64(s);
    return splitmix64(mixed);
}

/// Randomness consumers inside the accelerator. A site id packs the kind, the
/// layer and an index so that every draw site gets its own stream.
enum class SiteKind : std::uint8_t {
    InputSplit = 1, ///< arithmetic masks of the first layer inputs
    B2a = 2,        ///< Boolean to arithmetic converters, per neuron
    SignChain = 3,  ///< masked carry chain, per neuron
    Compare = 4,    ///< output layer comparisons, per comparison
    Trace = 16,     ///< campaign: per-trace derivation
};

constexpr std::uint64_t site_id(SiteKind kind, std::uint32_t layer, std::uint32_t index) {
    return (std::uint64_t(kind) << 56) | (std::uint64_t(layer & 0xffffff) << 32) | index;
}

/// xoshiro256** 1.0 (Blackman, Vigna), seeded through SplitMix64.
class Xoshiro256 {
  public:
    explicit Xoshiro256(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto &w : s_)
            w = splitmix64(sm);
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform integer in [0, bound) (Lemire's multiply-shift, bias < 2^-64 * bound).
    std::uint64_t below(std::uint64_t bound) {
        __extension__ using u128 = unsigned __int128;
        return static_cast<std::uint64_t>((static_cast<u128>(next()) * bound) >> 64);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return double(next() >> 11) * 0x1.0p-53; }

    /// Standard normal deviate by the Box-Muller transform (one value per call).
    double normal();

  private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::array<std::uint64_t, 4> s_{};
};

enum class PrngMode : std::uint8_t { On, Off };

std::string_view to_string(PrngMode mode);
PrngMode prng_mode_from_string(std::string_view text);

/// Source of masking randomness. With the PRNG off every draw is zero, which
/// turns every masked gadget into its unmasked counterpart.
///
/// A stream is single-owner. Independent streams for concurrent use come from
/// fork(), which applies derive_seed(seed, site).
class MaskStream {
  public:
    MaskStream(std::uint64_t seed, PrngMode mode) : seed_(seed), mode_(mode), gen_(seed) {}

    /// n uniform random bits, 1 <= n <= 64.
    std::uint64_t draw_bits(unsigned n);
    /// Uniform value of a `width`-bit two's complement number, 1 <= width <= 64.
    std::int64_t draw_signed(unsigned width);

    MaskStream fork(std::uint64_t site) const { return {derive_seed(seed_, site), mode_}; }

    std::uint64_t seed() const { return seed_; }
    PrngMode mode() const { return mode_; }
    std::uint64_t draws() const { return draws_; }

  private:
    std::uint64_t seed_;
    PrngMode mode_;
    std::uint64_t draws_ = 0;
    Xoshiro256 gen_;
};

} // namespace bnnsca
