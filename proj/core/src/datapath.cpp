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

#include "bnnsca/datapath.hpp"

#include "bnnsca/common.hpp"
#include "bnnsca/gadgets.hpp"

#include <algorithm>
#include <bit>
#include <deque>
#include <map>
#include <string>

namespace bnnsca {

std::string_view to_string(Variant v) { return v == Variant::Unmasked ? "unmasked" : "masked"; }

Variant variant_from_string(std::string_view text) {
    if (text == "unmasked")
        return Variant::Unmasked;
    if (text == "masked")
        return Variant::Masked;
    throw ContractViolation("variant must be 'unmasked' or 'masked'");
}

namespace {

constexpr std::int64_t kPixelMax = 255;

std::string idx_name(const char *prefix, std::size_t i, const char *suffix = "") {
    return prefix + std::to_string(i) + suffix;
}

} // namespace

Accelerator::Accelerator(BnnModel model, Variant variant) : model_(std::move(model)), variant_(variant) {
    const auto &dims = model_.dims();
    leaves_ = dims[0];
    for (std::size_t l = 1; l + 1 < dims.size(); ++l) {
        expects(dims[l] % 2 == 0, "hidden layer widths must be even (activations are paired)");
        leaves_ = std::max(leaves_, dims[l] / 2);
    }
    depth_ = std::max(1u, static_cast<unsigned>(std::bit_width(leaves_ - 1)));
    width_ = std::max(kLeafBits + depth_,
                      signed_width_for(kPixelMax * std::int64_t(dims[0]) + (std::int64_t{1} << (kBiasBits - 1))));
    expects(width_ <= 62, "topology too wide for 64-bit registers");
    build_registers();
    build_schedule();
}

std::size_t Accelerator::stage_size(unsigned stage) const {
    return (leaves_ + (std::size_t{1} << stage) - 1) >> stage;
}

std::uint16_t Accelerator::add_bank(BankKind kind, unsigned param, bool indexed, std::vector<std::uint32_t> logical) {
    banks_.push_back({kind, param, indexed, std::move(logical), {}});
    return static_cast<std::uint16_t>(banks_.size() - 1);
}

void Accelerator::build_registers() {
    const bool masked = variant_ == Variant::Masked;
    const auto &dims = model_.dims();
    const std::size_t n_hidden_leaves = dims.size() > 2 ? leaves_ : 0;
    // masked build: the top bit of every arithmetic share is dual-rail
    auto ord = [&](unsigned w) { return masked ? w - 1 : w; };
    auto bank_of = [&](BankKind kind, unsigned param, std::size_t count, auto name, unsigned w, unsigned ow,
                       bool indexed = false) {
        std::vector<std::uint32_t> ids;
        for (std::size_t i = 0; i < count; ++i)
            ids.push_back(regs_.add(name(i), w, ow));
        return add_bank(kind, param, indexed, std::move(ids));
    };

    if (masked) {
        b_split_r_ = bank_of(BankKind::SplitR, 0, dims[0], [](std::size_t i) { return idx_name("split.r", i); },
                             kPixelMaskBits, kPixelMaskBits);
        b_split_m_ = bank_of(BankKind::SplitM, 0, dims[0], [](std::size_t i) { return idx_name("split.m", i); },
                             kPixelMaskBits + 1, kPixelMaskBits);
    }
    b_in_ = bank_of(BankKind::In, 0, dims[0], [](std::size_t i) { return idx_name("in.r", i); }, kLeafBits,
                    ord(kLeafBits));
    if (n_hidden_leaves > 0) {
        if (masked) {
            b_b2a_r_ = bank_of(BankKind::B2aR, 0, n_hidden_leaves, [](std::size_t i) { return idx_name("b2a.r", i); },
                               kB2aMaskBits, kB2aMaskBits);
            // the B2A output needs 4 bits; everything above the mask width is
            // a sign extension of the share and goes dual-rail
            b_b2a_m_ = bank_of(BankKind::B2aM, 0, n_hidden_leaves, [](std::size_t i) { return idx_name("b2a.m", i); },
                               kB2aMaskedBits, kB2aMaskBits);
        } else {
            // a weighted pair lies in {-2, 0, 2}
            b_lut_ = bank_of(BankKind::Lut, 0, n_hidden_leaves, [](std::size_t i) { return idx_name("lut.r", i); }, 3,
                             3);
        }
    }
    b_tree_.assign(depth_ + 1, 0);
    for (unsigned s = 1; s <= depth_; ++s) {
        const std::string prefix = "tree.s" + std::to_string(s) + ".r";
        b_tree_[s] = bank_of(BankKind::Tree, s, stage_size(s), [&](std::size_t i) { return prefix + std::to_string(i); },
                             stage_width(s), ord(stage_width(s)));
    }
    const auto idx_bits = static_cast<unsigned>(std::max<std::size_t>(1, std::bit_width(model_.num_classes() - 1)));
    if (!masked) {
        b_act_out_ = add_bank(BankKind::ActOut, 0, false, {regs_.add("act.out", 1)});
        b_out_ = add_bank(BankKind::Out, 0, false, {regs_.add("out.best", width_), regs_.add("out.idx", idx_bits)});
        return;
    }
    std::size_t max_fan_out = 0;
    for (std::size_t l = 0; l < model_.num_layers(); ++l)
        max_fan_out = std::max(max_fan_out, model_.layer(l).fan_out());
    b_buf_ = bank_of(BankKind::Buf, 0, max_fan_out, [](std::size_t i) { return idx_name("buf.r", i); }, width_,
                     width_ - 1, true);
    b_act_s_ = add_bank(BankKind::ActS, 0, false,
                        {regs_.add("act.s1", width_, width_ - 1), regs_.add("act.s2", width_, width_ - 1)});
    b_chain_.assign(width_, 0);
    for (unsigned k = 0; k < width_; ++k) {
        const std::string p = "act.lut" + std::to_string(k);
        b_chain_[k] = add_bank(BankKind::Chain, k, false, {regs_.add(p + ".r", 1), regs_.add(p + ".c", 1)});
    }
    b_cmp_ = add_bank(BankKind::Cmp, 0, false,
                      {regs_.add("cmp.x", width_, width_ - 1), regs_.add("cmp.y", width_, width_ - 1)});
    b_out_ = add_bank(BankKind::Out, 0, false,
                      {regs_.add("out.a1", width_, width_ - 1), regs_.add("out.a2", width_, width_ - 1),
                       regs_.add("out.idx", idx_bits)});
}

void Accelerator::add_slot(std::uint16_t bank, std::int64_t cycle, std::size_t layer, Phase phase, std::size_t item) {
    slots_.push_back({cycle, bank, static_cast<std::uint16_t>(layer), phase, static_cast<std::uint32_t>(item)});
}

void Accelerator::build_schedule() {
    const std::size_t n_layers = model_.num_layers();
    const std::int64_t D = depth_;
    const std::int64_t W = width_;
    starts_.assign(n_layers, std::vector<std::int64_t>(3, -1));
    std::int64_t t = 0;

    if (variant_ == Variant::Unmasked) {
        for (std::size_t l = 0; l < n_layers; ++l) {
            const std::int64_t N = model_.layer(l).fan_out();
            const bool last = l + 1 == n_layers;
            starts_[l][0] = t;
            for (std::int64_t n = 0; n < N; ++n) {
                const std::int64_t e = t + n;
                add_slot(l == 0 ? b_in_ : b_lut_, e, l, Phase::Single, n);
                for (unsigned s = 1; s <= depth_; ++s)
                    add_slot(b_tree_[s], e + s, l, Phase::Single, n);
                add_slot(last ? b_out_ : b_act_out_, e + D + 1, l, Phase::Single, n);
            }
            const std::int64_t end = t + N - 1 + D + 1;
            t = end + 1 + (last ? 0 : kLayerTurnaround);
        }
    } else {
        const std::int64_t bits = std::int64_t(model_.input_width()) * kPixelMaskBits +
                                  std::int64_t(model_.layer(0).fan_out()) * W;
        const std::int64_t prefill = std::max<std::int64_t>(1, (bits + kPrngBitsPerCycle - 1) / kPrngBitsPerCycle);
        add_slot(b_split_r_, prefill - 1, 0, Phase::Masks, 0);
        add_slot(b_split_m_, prefill - 1, 0, Phase::Masks, 0);
        t = prefill;
        for (std::size_t l = 0; l < n_layers; ++l) {
            const std::int64_t N = model_.layer(l).fan_out();
            const bool last = l + 1 == n_layers;
            starts_[l][1] = t;
            starts_[l][2] = t + N;
            for (std::int64_t n = 0; n < N; ++n) {
                const std::int64_t e = t + n;
                add_slot(l == 0 ? b_in_ : b_b2a_r_, e, l, Phase::Masks, n);
                for (unsigned s = 1; s <= depth_; ++s)
                    add_slot(b_tree_[s], e + s, l, Phase::Masks, n);
                add_slot(b_buf_, e + D + 1, l, Phase::Masks, n);
            }
            std::int64_t end = 0;
            for (std::int64_t n = 0; n < N; ++n) {
                const std::int64_t e = t + N + n;
                if (l == 0) {
                    add_slot(b_in_, e, l, Phase::Masked, n);
                } else {
                    add_slot(b_b2a_r_, e, l, Phase::Masked, n);
                    add_slot(b_b2a_m_, e, l, Phase::Masked, n);
                }
                for (unsigned s = 1; s <= depth_; ++s)
                    add_slot(b_tree_[s], e + s, l, Phase::Masked, n);
                add_slot(b_act_s_, e + D + 1, l, Phase::Masked, n);
                if (!last)
                    for (unsigned k = 0; k < width_; ++k)
                        add_slot(b_chain_[k], e + D + 2 + k, l, Phase::Masked, n);
                end = e + D + 1 + (last ? 1 : W);
            }
            if (last) {
                const std::int64_t first_ready = t + N + D + 2;
                add_slot(b_out_, first_ready, l, Phase::Compare, 0);
                compare_start_.assign(N, -1);
                std::int64_t c = first_ready;
                for (std::int64_t j = 1; j < N; ++j) {
                    c = std::max(t + N + j + D + 2, j == 1 ? c + 1 : c + W + 2);
                    compare_start_[j] = c;
                    add_slot(b_cmp_, c, l, Phase::Compare, j);
                    for (unsigned k = 0; k < width_; ++k)
                        add_slot(b_chain_[k], c + 1 + k, l, Phase::Compare, j);
                    add_slot(b_out_, c + W + 1, l, Phase::Compare, j);
                    end = c + W + 1;
                }
            }
            t = end + 1 + (last ? 0 : kLayerTurnaround);
        }
    }
    latency_ = t;
    std::stable_sort(slots_.begin(), slots_.end(), [](const Slot &a, const Slot &b) {
        return a.cycle != b.cycle ? a.cycle < b.cycle : a.bank < b.bank;
    });
    for (std::size_t i = 0; i < slots_.size(); ++i)
        banks_[slots_[i].bank].slots.push_back(static_cast<std::uint32_t>(i));
}

std::int64_t Accelerator::item_start(std::size_t layer, Phase phase, std::size_t neuron) const {
    expects(layer < model_.num_layers() && neuron < model_.layer(layer).fan_out(), "item_start: no such neuron");
    const auto p = static_cast<std::size_t>(phase);
    expects(p < 3 && starts_[layer][p] >= 0, "item_start: phase does not exist in this build");
    return starts_[layer][p] + std::int64_t(neuron);
}

std::int64_t Accelerator::activation_cycle(std::size_t layer, std::size_t neuron, unsigned lut) const {
    expects(layer + 1 < model_.num_layers(), "activation_cycle: not a hidden layer");
    if (variant_ == Variant::Unmasked)
        return item_start(layer, Phase::Single, neuron) + depth_ + 1;
    expects(lut < width_, "activation_cycle: no such LUT");
    return item_start(layer, Phase::Masked, neuron) + depth_ + 2 + lut;
}

// ---------------------------------------------------------------------------

/// Lazily evaluated values of one inference.
class RunState {
  public:
    RunState(const Accelerator &acc, const InputImage &image, std::uint64_t seed, PrngMode mode)
        : acc_(acc), model_(acc.model_), image_(image), base_(seed, mode), masked_(acc.variant_ == Variant::Masked) {
        expects(image.pixels.size() == model_.input_width(), "image width does not match the model");
        layers_.resize(model_.num_layers());
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            const std::size_t n = model_.layer(l).fan_out();
            layers_[l].s1.assign(n, 0);
            layers_[l].s2.assign(n, 0);
            layers_[l].have.assign(n, 0);
            layers_[l].chain.resize(n);
            layers_[l].have_chain.assign(n, 0);
        }
    }

    /// Logical values a bank load writes (indexed banks: a single value).
    void bank_values(const Accelerator::Slot &slot, std::vector<std::int64_t> &out);

    ClassResult result();

  private:
    struct LayerData {
        std::vector<std::int64_t> s1, s2; // unmasked: s2 only
        std::vector<std::uint8_t> have;
        std::vector<ChainResult> chain;
        std::vector<std::uint8_t> have_chain;
        bool all_act = false;
        std::vector<BooleanSharePair> act;
    };
    struct Item {
        std::vector<ArithmeticSharePair> b2a;
        std::vector<std::vector<std::int64_t>> stages; // [0] = leaves
    };
    struct Tournament {
        bool done = false;
        std::vector<std::int64_t> best_a1, best_a2, best_idx; // after step j
        std::vector<CompareResult> cmp;                        // index = comparison
    };

    const std::vector<std::int64_t> &masks();
    std::vector<ArithmeticSharePair> b2a(std::size_t l, std::size_t n);
    std::vector<std::int64_t> lut_pairs(std::size_t l, std::size_t n);
    std::vector<std::int64_t> leaves(std::size_t l, Phase phase, std::size_t n, const std::vector<ArithmeticSharePair> *pairs);
    const Item &item(std::size_t l, Phase phase, std::size_t n);
    void ensure_sum(std::size_t l, std::size_t n);
    const ChainResult &chain(std::size_t l, std::size_t n);
    std::uint8_t activation(std::size_t l, std::size_t n);
    const std::vector<BooleanSharePair> &layer_acts(std::size_t l);
    const Tournament &tournament();

    const Accelerator &acc_;
    const BnnModel &model_;
    const InputImage &image_;
    MaskStream base_;
    bool masked_;

    bool have_masks_ = false;
    std::vector<std::int64_t> masks_;
    std::vector<LayerData> layers_;
    std::map<std::uint64_t, Item> items_;
    std::deque<std::uint64_t> item_order_;
    Tournament tour_;
};

const std::vector<std::int64_t> &RunState::masks() {
    if (!have_masks_) {
        MaskStream s = base_.fork(site_id(SiteKind::InputSplit, 0, 0));
        masks_.resize(image_.pixels.size());
        for (auto &r : masks_)
            r = static_cast<std::int64_t>(s.draw_bits(kPixelMaskBits));
        have_masks_ = true;
    }
    return masks_;
}

std::vector<ArithmeticSharePair> RunState::b2a(std::size_t l, std::size_t n) {
    const auto &acts = layer_acts(l - 1);
    const DenseLayer &layer = model_.layer(l);
    MaskStream s = base_.fork(site_id(SiteKind::B2a, static_cast<std::uint32_t>(l), static_cast<std::uint32_t>(n)));
    std::vector<ArithmeticSharePair> out(layer.fan_in() / 2);
    for (std::size_t j = 0; j < out.size(); ++j) {
        const auto p1 = xnor_one_share(acts[2 * j], layer.weight(n, 2 * j));
        const auto p2 = xnor_one_share(acts[2 * j + 1], layer.weight(n, 2 * j + 1));
        out[j] = b2a_convert(p1, p2, s);
    }
    return out;
}

std::vector<std::int64_t> RunState::lut_pairs(std::size_t l, std::size_t n) {
    const auto &acts = layer_acts(l - 1);
    const DenseLayer &layer = model_.layer(l);
    std::vector<std::int64_t> out(layer.fan_in() / 2);
    for (std::size_t j = 0; j < out.size(); ++j) {
        const std::int64_t a = acts[2 * j].value() ? 1 : -1;
        const std::int64_t b = acts[2 * j + 1].value() ? 1 : -1;
        out[j] = (layer.weight(n, 2 * j) ? a : -a) + (layer.weight(n, 2 * j + 1) ? b : -b);
    }
    return out;
}

std::vector<std::int64_t> RunState::leaves(std::size_t l, Phase phase, std::size_t n,
                                           const std::vector<ArithmeticSharePair> *pairs) {
    std::vector<std::int64_t> out(acc_.leaves_, 0);
    if (l == 0) {
        const DenseLayer &layer = model_.layer(0);
        const auto w = layer.weights(n);
        for (std::size_t i = 0; i < layer.fan_in(); ++i) {
            const std::int64_t x = image_.pixels[i];
            std::int64_t v = x;
            if (phase == Phase::Masks)
                v = masks()[i];
            else if (phase == Phase::Masked)
                v = x - masks()[i];
            out[i] = w[i] ? v : -v;
        }
        return out;
    }
    if (!masked_) {
        const auto p = lut_pairs(l, n);
        std::copy(p.begin(), p.end(), out.begin());
        return out;
    }
    for (std::size_t j = 0; j < pairs->size(); ++j)
        out[j] = phase == Phase::Masks ? (*pairs)[j].mask : (*pairs)[j].masked;
    return out;
}

const RunState::Item &RunState::item(std::size_t l, Phase phase, std::size_t n) {
    const std::uint64_t key = (std::uint64_t(l) << 40) | (std::uint64_t(phase) << 32) | n;
    if (auto it = items_.find(key); it != items_.end())
        return it->second;
    Item it;
    if (masked_ && l > 0)
        it.b2a = b2a(l, n);
    it.stages.resize(acc_.depth_ + 1);
    it.stages[0] = leaves(l, phase, n, &it.b2a);
    for (unsigned s = 1; s <= acc_.depth_; ++s) {
        const auto &prev = it.stages[s - 1];
        auto &cur = it.stages[s];
        cur.assign(acc_.stage_size(s), 0);
        for (std::size_t i = 0; i < cur.size(); ++i)
            cur[i] = prev[2 * i] + (2 * i + 1 < prev.size() ? prev[2 * i + 1] : 0);
    }
    if (phase != Phase::Masks)
        it.stages[acc_.depth_][0] += model_.layer(l).bias(n);

    // a handful of items are in flight at once; keep a small FIFO
    constexpr std::size_t kCapacity = 48;
    if (item_order_.size() >= kCapacity) {
        items_.erase(item_order_.front());
        item_order_.pop_front();
    }
    item_order_.push_back(key);
    return items_.emplace(key, std::move(it)).first->second;
}

void RunState::ensure_sum(std::size_t l, std::size_t n) {
    LayerData &ld = layers_[l];
    if (ld.have[n])
        return;
    auto total = [](const std::vector<std::int64_t> &v) {
        std::int64_t s = 0;
        for (auto x : v)
            s += x;
        return s;
    };
    const std::int64_t bias = model_.layer(l).bias(n);
    if (!masked_) {
        ld.s2[n] = total(leaves(l, Phase::Single, n, nullptr)) + bias;
    } else {
        std::vector<ArithmeticSharePair> pairs;
        if (l > 0)
            pairs = b2a(l, n);
        ld.s1[n] = total(leaves(l, Phase::Masks, n, &pairs));
        ld.s2[n] = total(leaves(l, Phase::Masked, n, &pairs)) + bias;
    }
    ld.have[n] = 1;
}

const ChainResult &RunState::chain(std::size_t l, std::size_t n) {
    LayerData &ld = layers_[l];
    if (!ld.have_chain[n]) {
        ensure_sum(l, n);
        MaskStream s =
            base_.fork(site_id(SiteKind::SignChain, static_cast<std::uint32_t>(l), static_cast<std::uint32_t>(n)));
        ld.chain[n] = masked_sign_chain(ld.s1[n], ld.s2[n], acc_.width_, s);
        ld.have_chain[n] = 1;
    }
    return ld.chain[n];
}

std::uint8_t RunState::activation(std::size_t l, std::size_t n) {
    ensure_sum(l, n);
    return sign_activation(layers_[l].s2[n]);
}

const std::vector<BooleanSharePair> &RunState::layer_acts(std::size_t l) {
    LayerData &ld = layers_[l];
    if (!ld.all_act) {
        ld.act.resize(ld.s2.size());
        for (std::size_t n = 0; n < ld.act.size(); ++n)
            ld.act[n] = masked_ ? chain(l, n).out : BooleanSharePair{activation(l, n), 0};
        ld.all_act = true;
    }
    return ld.act;
}

const RunState::Tournament &RunState::tournament() {
    if (tour_.done)
        return tour_;
    const std::size_t l = model_.num_layers() - 1;
    const std::size_t N = model_.layer(l).fan_out();
    for (std::size_t n = 0; n < N; ++n)
        ensure_sum(l, n);
    const LayerData &ld = layers_[l];
    tour_.best_a1.assign(N, 0);
    tour_.best_a2.assign(N, 0);
    tour_.best_idx.assign(N, 0);
    tour_.cmp.resize(N);
    std::int64_t a1 = ld.s1[0], a2 = ld.s2[0], idx = 0;
    tour_.best_a1[0] = a1;
    tour_.best_a2[0] = a2;
    for (std::size_t j = 1; j < N; ++j) {
        if (masked_) {
            MaskStream s =
                base_.fork(site_id(SiteKind::Compare, static_cast<std::uint32_t>(l), static_cast<std::uint32_t>(j)));
            tour_.cmp[j] = masked_output_compare({a1, a2}, {ld.s1[j], ld.s2[j]}, acc_.width_, s);
            // the comparison bit is recombined in the clear to steer the tournament
            if (!tour_.cmp[j].bit) {
                a1 = ld.s1[j];
                a2 = ld.s2[j];
                idx = static_cast<std::int64_t>(j);
            }
        } else if (ld.s2[j] > a2) {
            a2 = ld.s2[j];
            idx = static_cast<std::int64_t>(j);
        }
        tour_.best_a1[j] = a1;
        tour_.best_a2[j] = a2;
        tour_.best_idx[j] = idx;
    }
    tour_.done = true;
    return tour_;
}

void RunState::bank_values(const Accelerator::Slot &slot, std::vector<std::int64_t> &out) {
    using K = Accelerator::BankKind;
    const Accelerator::Bank &bank = acc_.banks_[slot.bank];
    const std::size_t l = slot.layer, n = slot.item;
    out.clear();
    switch (bank.kind) {
    case K::SplitR:
        out = masks();
        break;
    case K::SplitM:
        out.resize(image_.pixels.size());
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = std::int64_t(image_.pixels[i]) - masks()[i];
        break;
    case K::In:
        out.assign(item(l, slot.phase, n).stages[0].begin(),
                   item(l, slot.phase, n).stages[0].begin() + std::ptrdiff_t(bank.logical.size()));
        break;
    case K::Lut: {
        const auto &lv = item(l, slot.phase, n).stages[0];
        out.assign(lv.begin(), lv.begin() + std::ptrdiff_t(bank.logical.size()));
        break;
    }
    case K::B2aR:
    case K::B2aM: {
        const auto &pairs = item(l, slot.phase, n).b2a;
        out.assign(bank.logical.size(), 0);
        for (std::size_t j = 0; j < pairs.size(); ++j)
            out[j] = bank.kind == K::B2aR ? pairs[j].mask : pairs[j].masked;
        break;
    }
    case K::Tree:
        out = item(l, slot.phase, n).stages[bank.param];
        break;
    case K::ActOut:
        out.push_back(activation(l, n));
        break;
    case K::Buf:
        ensure_sum(l, n);
        out.push_back(layers_[l].s1[n]);
        break;
    case K::ActS:
        ensure_sum(l, n);
        out = {layers_[l].s1[n], layers_[l].s2[n]};
        break;
    case K::Chain: {
        const ChainStage st = slot.phase == Phase::Compare ? tournament().cmp[n].chain.stages[bank.param]
                                                           : chain(l, n).stages[bank.param];
        out = {st.r, st.c};
        break;
    }
    case K::Cmp:
        out = {tournament().cmp[n].x, tournament().cmp[n].y};
        break;
    case K::Out: {
        const Tournament &t = tournament();
        if (masked_)
            out = {t.best_a1[n], t.best_a2[n], t.best_idx[n]};
        else
            out = {t.best_a2[n], t.best_idx[n]};
        break;
    }
    }
}

ClassResult RunState::result() {
    const Tournament &t = tournament();
    const std::size_t l = model_.num_layers() - 1;
    ClassResult r;
    r.label = static_cast<int>(t.best_idx.back());
    for (std::size_t n = 0; n < model_.layer(l).fan_out(); ++n)
        r.scores.push_back(layers_[l].s1[n] + layers_[l].s2[n]);
    return r;
}

// ---------------------------------------------------------------------------

void Accelerator::simulate(const InputImage &image, std::uint64_t mask_seed, PrngMode mode, Window window,
                           std::span<const std::uint8_t> interest, CycleSink &sink) const {
    RunState rs(*this, image, mask_seed, mode);
    std::vector<std::uint64_t> state(regs_.size(), 0);
    std::vector<std::int64_t> vals;
    expects(interest.size() == regs_.size(), "simulate: interest mask does not match the register map");

    auto wanted = [&](std::uint32_t logical) {
        for (auto p : regs_.logical(logical).parts)
            if (interest[p])
                return true;
        return false;
    };
    std::vector<std::uint8_t> bank_wanted(banks_.size(), 0);
    for (std::size_t b = 0; b < banks_.size(); ++b)
        for (auto lid : banks_[b].logical)
            if (wanted(lid)) {
                bank_wanted[b] = 1;
                break;
            }

    auto write = [&](std::uint32_t logical, std::int64_t value, bool emit) {
        const LogicalRegister &lr = regs_.logical(logical);
        const std::uint64_t pattern = to_bits(value, lr.width);
        for (auto p : lr.parts) {
            if (!interest[p])
                continue;
            const RegisterInfo &ri = regs_.info(p);
            const std::uint64_t part = (pattern >> ri.bit_offset) & ((std::uint64_t{1} << ri.width) - 1);
            if (emit)
                sink.load(p, state[p], part);
            state[p] = part;
        }
    };
    auto apply = [&](const Slot &slot, bool emit) {
        const Bank &bank = banks_[slot.bank];
        rs.bank_values(slot, vals);
        if (bank.indexed) {
            write(bank.logical[slot.item], vals[0], emit);
            return;
        }
        for (std::size_t i = 0; i < bank.logical.size(); ++i)
            write(bank.logical[i], vals[i], emit);
    };

    const std::int64_t begin = std::max<std::int64_t>(0, window.begin);
    const std::int64_t end = std::min(window.end, latency_);

    // register contents at the start of the window: the last load before it
    for (std::size_t b = 0; b < banks_.size(); ++b) {
        if (!bank_wanted[b])
            continue;
        const Bank &bank = banks_[b];
        auto first_in = std::lower_bound(bank.slots.begin(), bank.slots.end(), begin,
                                         [&](std::uint32_t si, std::int64_t c) { return slots_[si].cycle < c; });
        if (!bank.indexed) {
            if (first_in != bank.slots.begin())
                apply(slots_[*(first_in - 1)], false);
            continue;
        }
        std::vector<std::uint8_t> seen(bank.logical.size(), 0);
        for (auto it = first_in; it != bank.slots.begin();) {
            const Slot &slot = slots_[*--it];
            if (seen[slot.item] || !wanted(bank.logical[slot.item]))
                continue;
            seen[slot.item] = 1;
            apply(slot, false);
        }
    }

    auto si = std::lower_bound(slots_.begin(), slots_.end(), begin,
                               [](const Slot &s, std::int64_t c) { return s.cycle < c; });
    for (std::int64_t t = begin; t < end; ++t) {
        sink.begin_cycle(t);
        for (; si != slots_.end() && si->cycle == t; ++si) {
            if (!bank_wanted[si->bank])
                continue;
            if (banks_[si->bank].indexed && !wanted(banks_[si->bank].logical[si->item]))
                continue;
            apply(*si, true);
        }
        sink.end_cycle();
    }
}

RunResult Accelerator::run(const InputImage &image, std::uint64_t mask_seed, PrngMode mode, CycleSink *sink) const {
    if (sink) {
        const auto all = regs_.select({});
        simulate(image, mask_seed, mode, {}, all, *sink);
    }
    RunState rs(*this, image, mask_seed, mode);
    return {rs.result(), latency_};
}

RunResult run_unmasked(const BnnModel &model, const InputImage &image, CycleSink *sink) {
    return Accelerator(model, Variant::Unmasked).run(image, 0, PrngMode::Off, sink);
}

RunResult run_masked(const BnnModel &model, const InputImage &image, const MaskStream &stream, CycleSink *sink) {
    return Accelerator(model, Variant::Masked).run(image, stream.seed(), stream.mode(), sink);
}

std::int64_t latency(Variant variant, const std::vector<std::size_t> &dims) {
    return Accelerator(BnnModel(dims), variant).latency();
}

} // namespace bnnsca
