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

#include "bnnsca/datapath.hpp"
#include "bnnsca/leakage.hpp"
#include "bnnsca/model.hpp"
#include "bnnsca/stats.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bnnsca {

/// Highest tree stage a weight hypothesis may target (2^(2^s) guesses).
inline constexpr unsigned kMaxAttackStage = 3;

/// Predicts one leakage value per guess for a known input.
class HypothesisSpace {
  public:
    virtual ~HypothesisSpace() = default;

    virtual std::size_t guesses() const = 0;
    virtual void predict(const InputImage &image, std::span<double> out) const = 0;
    /// Index of the guess whose prediction is the additive inverse, or npos.
    virtual std::size_t inverse(std::size_t) const { return npos; }
    virtual std::string label(std::size_t guess) const { return std::to_string(guess); }

    static constexpr std::size_t npos = std::size_t(-1);
};

/// Weight bits feeding one first-layer tree register. Guess bit k set means
/// pixel reg * 2^stage + k enters with weight +1.
///
/// The attacker's own model of the tree slice: the register holds the signed
/// sum of its 2^stage weighted pixels. The masked build keeps the register MSB
/// in dual-rail logic, so only the lower bits leak there.
class TreeHypothesis final : public HypothesisSpace {
  public:
    TreeHypothesis(Variant variant, unsigned stage, std::size_t reg, std::size_t input_width = 784,
                   unsigned max_stage = kMaxAttackStage);
    /// Restricts the space to the listed weight tuples.
    TreeHypothesis(Variant variant, unsigned stage, std::size_t reg, std::vector<std::uint64_t> candidates,
                   std::size_t input_width = 784, unsigned max_stage = kMaxAttackStage);

    unsigned stage() const { return stage_; }
    std::size_t reg() const { return reg_; }
    unsigned group_bits() const { return 1u << stage_; }
    std::uint64_t guess_bits(std::size_t i) const { return candidates_.empty() ? i : candidates_[i]; }
    unsigned leak_bits() const { return leak_bits_; }

    /// Weight tuple of the item loaded before the target one; none means the
    /// register still holds its reset value 0.
    void set_previous(std::optional<std::uint64_t> bits) { previous_ = bits; }

    std::int64_t value(std::uint64_t bits, std::span<const std::uint8_t> pixels) const;

    std::size_t guesses() const override;
    void predict(const InputImage &image, std::span<double> out) const override;
    std::size_t inverse(std::size_t guess) const override;
    std::string label(std::size_t guess) const override;

  private:
    unsigned stage_;
    std::size_t reg_;
    std::size_t width_;
    unsigned leak_bits_;
    std::vector<std::uint64_t> candidates_;
    std::optional<std::uint64_t> previous_;
};

/// Hamming distance between the register's previous value and its value
/// under `bits` for the given image. `prev` is the previous register value.
unsigned hypothesis_hd(const TreeHypothesis &space, std::uint64_t bits, const InputImage &image,
                       std::int64_t prev = 0);

/// Weight tuple of (layer 0, neuron) feeding tree register `reg` of `stage`.
std::uint64_t true_tree_guess(const BnnModel &model, std::size_t neuron, unsigned stage, std::size_t reg);

/// Bias candidates for one first-layer neuron with known weights.
class BiasCandidates {
  public:
    BiasCandidates(std::vector<std::uint8_t> weights, std::int32_t lo, std::int32_t hi);

    std::size_t count() const { return std::size_t(hi_ - lo_ + 1); }
    std::int32_t candidate(std::size_t i) const { return lo_ + std::int32_t(i); }
    std::int32_t lo() const { return lo_; }
    std::int32_t hi() const { return hi_; }
    /// Weighted pixel sum without the bias.
    std::int64_t partial_sum(const InputImage &image) const;

  private:
    std::vector<std::uint8_t> weights_;
    std::int32_t lo_, hi_;
};

/// Activation bit [sum + b > 0] per candidate b. Predicts the first load of
/// a one-bit activation register after reset.
class ActivationHypothesis final : public HypothesisSpace {
  public:
    explicit ActivationHypothesis(BiasCandidates candidates) : c_(std::move(candidates)) {}

    const BiasCandidates &candidates() const { return c_; }
    std::size_t guesses() const override { return c_.count(); }
    void predict(const InputImage &image, std::span<double> out) const override;
    std::string label(std::size_t guess) const override { return std::to_string(c_.candidate(guess)); }

  private:
    BiasCandidates c_;
};

/// Hamming weight of the bias-add register, sum + b, over `leak_bits` bits.
class BiasHypothesis final : public HypothesisSpace {
  public:
    BiasHypothesis(BiasCandidates candidates, unsigned leak_bits) : c_(std::move(candidates)), bits_(leak_bits) {}

    const BiasCandidates &candidates() const { return c_; }
    std::size_t guesses() const override { return c_.count(); }
    void predict(const InputImage &image, std::span<double> out) const override;
    std::string label(std::size_t guess) const override { return std::to_string(c_.candidate(guess)); }

  private:
    BiasCandidates c_;
    unsigned bits_;
};

struct AttackOptions {
    std::vector<std::size_t> checkpoints; ///< empty: every 5%
    double level = kConfidenceLevel;
    unsigned threads = 0;
    /// Sample used for crossings and false-positive counts; none: each guess's peak.
    std::optional<std::size_t> target_sample;
};

struct AttackResult {
    std::size_t best_guess = 0;
    std::size_t inverse_guess = HypothesisSpace::npos;
    std::size_t peak_sample = 0;
    double peak_rho = 0;
    /// First checkpoint after which the best guess stays above the threshold.
    std::optional<std::size_t> crossing;
    /// Guesses above the threshold with all traces, at the evaluated sample.
    std::size_t guesses_over_threshold = 0;
    double threshold = 0;
    CorrelationSurface surface;
};

/// Pearson CPA of every space against the traces, one result per space.
/// Traces are used as given; pass center-squared traces for second order.
std::vector<AttackResult> cpa(const TraceSet &traces, std::span<const HypothesisSpace *const> spaces,
                              const AttackOptions &options = {});

AttackResult cpa_first_order(const TraceSet &traces, const HypothesisSpace &space, const AttackOptions &options = {});
AttackResult cpa_second_order(const TraceSet &traces, const HypothesisSpace &space,
                              const AttackOptions &options = {});

/// Per-register outcome of a weight sweep.
struct GroupRecovery {
    std::size_t reg = 0;
    std::uint64_t best = 0;
    std::uint64_t inverse = 0;
    std::optional<std::size_t> crossing;
    std::size_t over_threshold = 0;
    /// true while {best, inverse} could not be told apart
    bool ambiguous = true;
    /// tuple chosen after resolution (best when unresolved)
    std::uint64_t chosen = 0;
};

struct WeightRecovery {
    unsigned stage = 0;
    std::vector<GroupRecovery> groups;
    /// One entry per first-layer input; none where the group is inconclusive.
    std::vector<std::optional<bool>> weights;
    std::size_t conclusive() const;
};

struct RecoverySchedule {
    unsigned stage = 2;
    /// Also attack stage + 1 and use it to fix the sign of each stage group.
    bool resolve = true;
    std::size_t input_width = 784;
    /// Weights of the neuron streamed before the target; empty: registers at reset.
    std::vector<std::uint8_t> previous_weights;
};

/// Sweeps every register of the stage (first layer, first neuron) over the
/// same traces.
WeightRecovery recover_weights(const TraceSet &traces, Variant variant, const RecoverySchedule &schedule,
                               const AttackOptions &options = {});

enum class BiasMode : std::uint8_t { HammingWeight, Sign };

struct BiasEstimate {
    bool conclusive = false;
    std::int32_t value = 0; ///< best candidate
    /// Candidates statistically indistinguishable from the best one.
    std::int32_t lo = 0, hi = 0;
    /// HammingWeight mode: strongest rho among the values one bit away from
    /// the best candidate that lie outside the range.
    double neighbour_rho = 0;
    AttackResult attack;
};

/// HammingWeight correlates sum + b on the bias-add register; it is conclusive
/// when the best candidate crosses the threshold, is not on the range
/// boundary and beats every out-of-range value one bit away from it. Sign
/// correlates the activation and yields an interval.
BiasEstimate recover_bias(const TraceSet &traces, const BiasCandidates &candidates, BiasMode mode,
                          unsigned leak_bits, const AttackOptions &options = {});

} // namespace bnnsca
