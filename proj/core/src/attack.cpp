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

#include "bnnsca/common.hpp"

#include <algorithm>
#include <cmath>

namespace bnnsca {

namespace {

unsigned tree_leak_bits(Variant variant, unsigned stage) {
    const unsigned width = kLeafBits + stage;
    return variant == Variant::Masked ? width - 1 : width;
}

} // namespace

TreeHypothesis::TreeHypothesis(Variant variant, unsigned stage, std::size_t reg, std::size_t input_width,
                               unsigned max_stage)
    : TreeHypothesis(variant, stage, reg, std::vector<std::uint64_t>{}, input_width, max_stage) {}

TreeHypothesis::TreeHypothesis(Variant variant, unsigned stage, std::size_t reg, std::vector<std::uint64_t> candidates,
                               std::size_t input_width, unsigned max_stage)
    : stage_(stage), reg_(reg), width_(input_width), leak_bits_(tree_leak_bits(variant, stage)),
      candidates_(std::move(candidates)) {
    expects(stage >= 1 && stage <= max_stage && stage <= 5, "tree hypothesis: stage outside the attackable range");
    expects(reg << stage < input_width, "tree hypothesis: register index outside the stage");
    const std::uint64_t mask = group_bits() == 64 ? ~0ull : (1ull << group_bits()) - 1;
    for (auto c : candidates_)
        expects((c & ~mask) == 0, "tree hypothesis: candidate has bits outside the group");
}

std::int64_t TreeHypothesis::value(std::uint64_t bits, std::span<const std::uint8_t> pixels) const {
    std::int64_t v = 0;
    const std::size_t first = reg_ << stage_;
    for (unsigned k = 0; k < group_bits(); ++k) {
        const std::size_t i = first + k;
        if (i >= width_ || i >= pixels.size())
            break;
        v += (bits >> k & 1) ? std::int64_t(pixels[i]) : -std::int64_t(pixels[i]);
    }
    return v;
}

std::size_t TreeHypothesis::guesses() const {
    return candidates_.empty() ? std::size_t(1) << group_bits() : candidates_.size();
}

void TreeHypothesis::predict(const InputImage &image, std::span<double> out) const {
    expects(out.size() == guesses(), "tree hypothesis: output size mismatch");
    const std::int64_t prev = previous_ ? value(*previous_, image.pixels) : 0;
    const std::uint64_t p = to_bits(prev, leak_bits_);
    for (std::size_t g = 0; g < out.size(); ++g)
        out[g] = hamming_distance(p, to_bits(value(guess_bits(g), image.pixels), leak_bits_));
}

std::size_t TreeHypothesis::inverse(std::size_t guess) const {
    const std::uint64_t mask = (1ull << group_bits()) - 1;
    const std::uint64_t inv = ~guess_bits(guess) & mask;
    if (candidates_.empty())
        return inv;
    auto it = std::find(candidates_.begin(), candidates_.end(), inv);
    return it == candidates_.end() ? npos : std::size_t(it - candidates_.begin());
}

std::string TreeHypothesis::label(std::size_t guess) const {
    std::string s;
    const auto bits = guess_bits(guess);
    for (unsigned k = 0; k < group_bits(); ++k)
        s.push_back((bits >> k & 1) ? '1' : '0');
    return s;
}

unsigned hypothesis_hd(const TreeHypothesis &space, std::uint64_t bits, const InputImage &image, std::int64_t prev) {
    const unsigned w = space.leak_bits();
    return hamming_distance(to_bits(prev, w), to_bits(space.value(bits, image.pixels), w));
}

std::uint64_t true_tree_guess(const BnnModel &model, std::size_t neuron, unsigned stage, std::size_t reg) {
    const auto w = model.layer(0).weights(neuron);
    std::uint64_t bits = 0;
    for (unsigned k = 0; k < (1u << stage); ++k) {
        const std::size_t i = (reg << stage) + k;
        if (i < w.size() && w[i])
            bits |= 1ull << k;
    }
    return bits;
}

BiasCandidates::BiasCandidates(std::vector<std::uint8_t> weights, std::int32_t lo, std::int32_t hi)
    : weights_(std::move(weights)), lo_(lo), hi_(hi) {
    expects(lo <= hi, "bias candidates: empty range");
}

std::int64_t BiasCandidates::partial_sum(const InputImage &image) const {
    expects(image.pixels.size() == weights_.size(), "bias candidates: image width does not match the weights");
    std::int64_t s = 0;
    for (std::size_t i = 0; i < weights_.size(); ++i)
        s += weights_[i] ? std::int64_t(image.pixels[i]) : -std::int64_t(image.pixels[i]);
    return s;
}

void ActivationHypothesis::predict(const InputImage &image, std::span<double> out) const {
    const std::int64_t s = c_.partial_sum(image);
    for (std::size_t g = 0; g < out.size(); ++g)
        out[g] = sign_activation(s + c_.candidate(g));
}

void BiasHypothesis::predict(const InputImage &image, std::span<double> out) const {
    const std::int64_t s = c_.partial_sum(image);
    for (std::size_t g = 0; g < out.size(); ++g)
        out[g] = hamming_weight(to_bits(s + c_.candidate(g), bits_));
}

std::vector<AttackResult> cpa(const TraceSet &traces, std::span<const HypothesisSpace *const> spaces,
                              const AttackOptions &options) {
    expects(traces.n_traces >= 4, "cpa needs at least 4 traces");
    expects(!spaces.empty(), "cpa: no hypothesis space");
    std::vector<std::size_t> offset{0};
    for (const auto *s : spaces)
        offset.push_back(offset.back() + s->guesses());
    const std::size_t total = offset.back();
    const std::size_t T = traces.n_samples;
    if (options.target_sample)
        expects(*options.target_sample < T, "cpa: target sample outside the trace");

    const auto cps = options.checkpoints.empty() ? fractional_checkpoints(traces.n_traces) : options.checkpoints;
    CorrelationSurface all = correlate(
        traces.samples, traces.n_traces, T, total,
        [&](std::size_t i, std::span<double> out) {
            for (std::size_t k = 0; k < spaces.size(); ++k)
                spaces[k]->predict(traces.inputs[i], out.subspan(offset[k], spaces[k]->guesses()));
        },
        cps, options.threads);

    const double thr = confidence_threshold(traces.n_traces, options.level);
    std::vector<AttackResult> results;
    results.reserve(spaces.size());
    for (std::size_t k = 0; k < spaces.size(); ++k) {
        const std::size_t G = spaces[k]->guesses();
        AttackResult r;
        r.threshold = thr;
        auto &sf = r.surface;
        sf.guesses = G;
        sf.samples = T;
        sf.checkpoints = all.checkpoints;
        sf.rho.assign(all.rho.begin() + std::ptrdiff_t(offset[k] * T),
                      all.rho.begin() + std::ptrdiff_t((offset[k] + G) * T));
        sf.degenerate.assign(all.degenerate.begin() + std::ptrdiff_t(offset[k] * T),
                             all.degenerate.begin() + std::ptrdiff_t((offset[k] + G) * T));
        sf.evolution.reserve(sf.checkpoints.size() * G * T);
        for (std::size_t c = 0; c < sf.checkpoints.size(); ++c)
            for (std::size_t g = 0; g < G; ++g)
                for (std::size_t t = 0; t < T; ++t)
                    sf.evolution.push_back(all.evolution_at(c, offset[k] + g, t));

        double best = -1;
        for (std::size_t g = 0; g < G; ++g) {
            const std::size_t t = options.target_sample ? *options.target_sample : sf.peak_sample(g);
            const double a = std::abs(sf.at(g, t));
            if (a > best) {
                best = a;
                r.best_guess = g;
                r.peak_sample = t;
            }
            if (a >= thr)
                ++r.guesses_over_threshold;
        }
        r.peak_rho = sf.at(r.best_guess, r.peak_sample);
        r.inverse_guess = spaces[k]->inverse(r.best_guess);
        std::vector<double> ev(sf.checkpoints.size());
        for (std::size_t c = 0; c < ev.size(); ++c)
            ev[c] = sf.evolution_at(c, r.best_guess, r.peak_sample);
        r.crossing = first_crossing(sf.checkpoints, ev, options.level);
        results.push_back(std::move(r));
    }
    return results;
}

AttackResult cpa_first_order(const TraceSet &traces, const HypothesisSpace &space, const AttackOptions &options) {
    const HypothesisSpace *one[] = {&space};
    return std::move(cpa(traces, one, options).front());
}

AttackResult cpa_second_order(const TraceSet &traces, const HypothesisSpace &space, const AttackOptions &options) {
    return cpa_first_order(center_square(traces), space, options);
}

std::size_t WeightRecovery::conclusive() const {
    return std::size_t(std::count_if(groups.begin(), groups.end(), [](const GroupRecovery &g) { return g.crossing; }));
}

WeightRecovery recover_weights(const TraceSet &traces, Variant variant, const RecoverySchedule &schedule,
                               const AttackOptions &options) {
    const unsigned s = schedule.stage;
    const auto prev_bits = [&](unsigned stage, std::size_t reg) -> std::optional<std::uint64_t> {
        if (schedule.previous_weights.empty())
            return std::nullopt;
        std::uint64_t bits = 0;
        for (unsigned k = 0; k < (1u << stage); ++k) {
            const std::size_t i = (reg << stage) + k;
            if (i < schedule.previous_weights.size() && schedule.previous_weights[i])
                bits |= 1ull << k;
        }
        return bits;
    };
    const std::size_t n_groups = (schedule.input_width + (1u << s) - 1) >> s;
    std::vector<TreeHypothesis> spaces;
    spaces.reserve(n_groups);
    for (std::size_t r = 0; r < n_groups; ++r) {
        spaces.emplace_back(variant, s, r, schedule.input_width);
        spaces.back().set_previous(prev_bits(s, r));
    }
    std::vector<const HypothesisSpace *> ptrs;
    for (const auto &sp : spaces)
        ptrs.push_back(&sp);
    const auto results = cpa(traces, ptrs, options);

    WeightRecovery out;
    out.stage = s;
    for (std::size_t r = 0; r < n_groups; ++r) {
        GroupRecovery g;
        g.reg = r;
        g.best = spaces[r].guess_bits(results[r].best_guess);
        g.inverse = spaces[r].guess_bits(results[r].inverse_guess);
        g.crossing = results[r].crossing;
        g.over_threshold = results[r].guesses_over_threshold;
        g.chosen = g.best;
        out.groups.push_back(g);
    }

    if (schedule.resolve) {
        // stage s+1 register k sums stage-s groups 2k and 2k+1: of the four
        // sign combinations, the right one correlates positively
        std::vector<TreeHypothesis> upper;
        std::vector<std::size_t> pairs;
        const unsigned half = 1u << s;
        for (std::size_t k = 0; 2 * k + 1 < n_groups; ++k) {
            const auto &a = out.groups[2 * k], &b = out.groups[2 * k + 1];
            if (!a.crossing || !b.crossing)
                continue;
            std::vector<std::uint64_t> combos{a.best | b.best << half, a.inverse | b.best << half,
                                              a.best | b.inverse << half, a.inverse | b.inverse << half};
            upper.emplace_back(variant, s + 1, k, std::move(combos), schedule.input_width, s + 1);
            upper.back().set_previous(prev_bits(s + 1, k));
            pairs.push_back(k);
        }
        if (!upper.empty()) {
            std::vector<const HypothesisSpace *> up;
            for (const auto &sp : upper)
                up.push_back(&sp);
            AttackOptions up_opt = options;
            up_opt.target_sample.reset();
            const auto res = cpa(traces, up, up_opt);
            for (std::size_t i = 0; i < upper.size(); ++i) {
                const auto &sf = res[i].surface;
                std::size_t pick = 0;
                double best = -2;
                for (std::size_t c = 0; c < 4; ++c) {
                    double v = -2;
                    for (std::size_t t = 0; t < sf.samples; ++t)
                        v = std::max(v, sf.at(c, t));
                    if (v > best) {
                        best = v;
                        pick = c;
                    }
                }
                const std::uint64_t bits = upper[i].guess_bits(pick);
                const std::uint64_t mask = (1ull << half) - 1;
                auto &a = out.groups[2 * pairs[i]], &b = out.groups[2 * pairs[i] + 1];
                a.chosen = bits & mask;
                b.chosen = bits >> half & mask;
                a.ambiguous = b.ambiguous = false;
            }
        }
    }

    out.weights.assign(schedule.input_width, std::nullopt);
    for (const auto &g : out.groups) {
        if (!g.crossing)
            continue;
        for (unsigned k = 0; k < (1u << s); ++k) {
            const std::size_t i = (g.reg << s) + k;
            if (i < out.weights.size())
                out.weights[i] = (g.chosen >> k & 1) != 0;
        }
    }
    return out;
}

namespace {

// Bias values at a single-bit distance from `centre`, outside [lo, hi].
class NeighbourBiases final : public HypothesisSpace {
  public:
    NeighbourBiases(const BiasCandidates &c, std::int32_t centre, unsigned bits) : c_(c), bits_(bits) {
        for (unsigned k = 0; k < bits && k < 31; ++k)
            for (std::int64_t v : {std::int64_t(centre) + (std::int64_t{1} << k), std::int64_t(centre) - (std::int64_t{1} << k)})
                if (v < c.lo() || v > c.hi())
                    values_.push_back(v);
    }

    std::size_t guesses() const override { return values_.size(); }
    void predict(const InputImage &image, std::span<double> out) const override {
        const std::int64_t s = c_.partial_sum(image);
        for (std::size_t g = 0; g < out.size(); ++g)
            out[g] = hamming_weight(to_bits(s + values_[g], bits_));
    }

  private:
    const BiasCandidates &c_;
    unsigned bits_;
    std::vector<std::int64_t> values_;
};

} // namespace

BiasEstimate recover_bias(const TraceSet &traces, const BiasCandidates &candidates, BiasMode mode, unsigned leak_bits,
                          const AttackOptions &options) {
    BiasEstimate est;
    if (mode == BiasMode::HammingWeight)
        est.attack = cpa_first_order(traces, BiasHypothesis(candidates, leak_bits), options);
    else
        est.attack = cpa_first_order(traces, ActivationHypothesis(candidates), options);
    const auto &a = est.attack;
    const std::size_t G = candidates.count();
    est.value = candidates.candidate(a.best_guess);

    // candidates whose Fisher z is within the 99.99% band of the best one
    const double n = double(traces.n_traces);
    const double margin = normal_quantile(options.level) * std::sqrt(2.0 / (n - 3.0));
    const auto fz = [](double r) { return std::atanh(std::clamp(r, -0.999999999, 0.999999999)); };
    const double zb = fz(std::abs(a.peak_rho));
    std::size_t lo = a.best_guess, hi = a.best_guess;
    for (std::size_t g = 0; g < G; ++g)
        if (zb - fz(std::abs(a.surface.at(g, a.peak_sample))) <= margin) {
            lo = std::min(lo, g);
            hi = std::max(hi, g);
        }
    est.lo = candidates.candidate(lo);
    est.hi = candidates.candidate(hi);

    // a best candidate on the range boundary means the truth may lie outside
    const bool interior = mode == BiasMode::HammingWeight ? a.best_guess > 0 && a.best_guess + 1 < G
                                                          : lo > 0 && hi + 1 < G;
    est.conclusive = a.crossing.has_value() && interior;
    if (est.conclusive && mode == BiasMode::HammingWeight) {
        // sums that differ in one bit leak almost alike, so a range without
        // the truth still peaks inside; the truth would beat that peak
        const NeighbourBiases probe(candidates, est.value, leak_bits);
        if (probe.guesses() > 0) {
            AttackOptions po = options;
            po.target_sample = a.peak_sample;
            const auto p = cpa_first_order(traces, probe, po);
            est.neighbour_rho = p.peak_rho;
            est.conclusive = std::abs(p.peak_rho) < std::abs(a.peak_rho);
        }
    }
    return est;
}

} // namespace bnnsca
