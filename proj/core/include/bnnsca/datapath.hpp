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

#include "bnnsca/model.hpp"
#include "bnnsca/randomness.hpp"
#include "bnnsca/registers.hpp"

#include <cstdint>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

namespace bnnsca {

enum class Variant : std::uint8_t { Unmasked, Masked };

std::string_view to_string(Variant v);
Variant variant_from_string(std::string_view text);

/// Idle cycles between two layers (weight memory switch and pipeline drain).
inline constexpr std::int64_t kLayerTurnaround = 22;
/// PRNG throughput; the masked build buffers the input masks and the first
/// layer's chain randoms before starting.
inline constexpr std::int64_t kPrngBitsPerCycle = 128;
/// Width of a tree leaf: a pixel or its negation.
inline constexpr unsigned kLeafBits = 9;

/// Which pass of the tree an item belongs to. The unmasked build has a single
/// pass; the masked build sends the masks first, then the masked values.
enum class Phase : std::uint8_t { Single = 0, Masks = 1, Masked = 2, Compare = 3 };

struct Window {
    std::int64_t begin = 0;
    std::int64_t end = std::numeric_limits<std::int64_t>::max();
};

struct RunResult {
    ClassResult result; ///< masked build: scores recombined for reporting only
    std::int64_t cycles = 0;
};

/// Register-level model of the accelerator.
///
/// Every layer streams its neurons through a pipelined adder tree, one neuron
/// per cycle. Stage s of the tree holds ceil(leaves / 2^s) registers of
/// kLeafBits + s bits; the last stage adds the bias. Hidden layers feed the
/// tree with pairs of weighted activations (two neurons per leaf).
///
/// Register values are computed on demand from the inputs, so a run can be
/// restricted to a cycle window and to the registers of interest.
class Accelerator {
  public:
    Accelerator(BnnModel model, Variant variant);

    const BnnModel &model() const { return model_; }
    Variant variant() const { return variant_; }
    const RegisterMap &registers() const { return regs_; }

    std::size_t tree_leaves() const { return leaves_; }
    unsigned depth() const { return depth_; }
    /// Width of the final tree stage, the buffered sums and the sign chain.
    unsigned final_width() const { return width_; }
    unsigned stage_width(unsigned stage) const { return stage == depth_ ? width_ : kLeafBits + stage; }
    std::size_t stage_size(unsigned stage) const;

    std::int64_t latency() const { return latency_; }

    /// Cycle in which item (layer, phase, neuron) loads its leaf registers;
    /// tree stage s loads s cycles later.
    std::int64_t item_start(std::size_t layer, Phase phase, std::size_t neuron) const;
    std::int64_t tree_cycle(std::size_t layer, Phase phase, std::size_t neuron, unsigned stage) const {
        return item_start(layer, phase, neuron) + stage;
    }
    /// Unmasked: the act.out load. Masked: the load of chain LUT `lut`.
    std::int64_t activation_cycle(std::size_t layer, std::size_t neuron, unsigned lut = 0) const;

    /// Full inference. Without a sink only the values behind the result are computed.
    RunResult run(const InputImage &image, std::uint64_t mask_seed, PrngMode mode, CycleSink *sink = nullptr) const;

    /// Reports the loads of the registers flagged in `interest` (one flag per
    /// physical register) for every cycle of `window`. Register contents at
    /// the start of the window are those of a full run.
    void simulate(const InputImage &image, std::uint64_t mask_seed, PrngMode mode, Window window,
                  std::span<const std::uint8_t> interest, CycleSink &sink) const;

    enum class BankKind : std::uint8_t { In, Lut, Tree, ActOut, Out, SplitR, SplitM, B2aR, B2aM, Buf, ActS, Chain, Cmp };

    struct Bank {
        BankKind kind;
        unsigned param = 0;                 ///< stage or LUT index
        bool indexed = false;               ///< a load writes only register [item]
        std::vector<std::uint32_t> logical; ///< logical registers, in value order
        std::vector<std::uint32_t> slots;   ///< indices into the schedule, by cycle
    };

    struct Slot {
        std::int64_t cycle;
        std::uint16_t bank;
        std::uint16_t layer;
        Phase phase;
        std::uint32_t item;
    };

    const std::vector<Bank> &banks() const { return banks_; }
    const std::vector<Slot> &schedule() const { return slots_; }

  private:
    friend class RunState;

    std::uint16_t add_bank(BankKind kind, unsigned param, bool indexed, std::vector<std::uint32_t> logical);
    void add_slot(std::uint16_t bank, std::int64_t cycle, std::size_t layer, Phase phase, std::size_t item);
    void build_registers();
    void build_schedule();

    BnnModel model_;
    Variant variant_;
    std::size_t leaves_ = 0;
    unsigned depth_ = 0;
    unsigned width_ = 0;
    RegisterMap regs_;
    std::vector<Bank> banks_;
    std::vector<Slot> slots_;
    std::int64_t latency_ = 0;

    // bank ids
    std::uint16_t b_in_ = 0, b_lut_ = 0, b_act_out_ = 0, b_out_ = 0, b_split_r_ = 0, b_split_m_ = 0, b_b2a_r_ = 0,
                  b_b2a_m_ = 0, b_buf_ = 0, b_act_s_ = 0, b_cmp_ = 0;
    std::vector<std::uint16_t> b_tree_;  // index = stage
    std::vector<std::uint16_t> b_chain_; // index = LUT

    std::vector<std::vector<std::int64_t>> starts_; // [layer][phase]
    std::vector<std::int64_t> compare_start_;       // masked output layer, index = comparison
};

RunResult run_unmasked(const BnnModel &model, const InputImage &image, CycleSink *sink = nullptr);
RunResult run_masked(const BnnModel &model, const InputImage &image, const MaskStream &stream,
                     CycleSink *sink = nullptr);

/// Cycle count of one inference.
std::int64_t latency(Variant variant, const std::vector<std::size_t> &dims = kMnistTopology);

} // namespace bnnsca
