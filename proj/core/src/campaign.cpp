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

#include "bnnsca/campaign.hpp"

#include "bnnsca/common.hpp"
#include "bnnsca/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

namespace bnnsca {

namespace fs = std::filesystem;

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t b = 0;
    while (true) {
        const auto e = s.find(sep, b);
        out.push_back(trim(s.substr(b, e == std::string_view::npos ? std::string_view::npos : e - b)));
        if (e == std::string_view::npos)
            break;
        b = e + 1;
    }
    return out;
}

template <class T> T parse_number(std::string_view key, std::string_view text) {
    T v{};
    const auto *end = text.data() + text.size();
    auto [p, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc{} || p != end || text.empty())
        throw ConfigError(std::string(key) + ": not a number: '" + std::string(text) + "'");
    return v;
}

std::string format_double(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

bool parse_bool(std::string_view key, std::string_view text) {
    if (text == "true" || text == "yes" || text == "1")
        return true;
    if (text == "false" || text == "no" || text == "0")
        return false;
    throw ConfigError(std::string(key) + ": expected true or false");
}

template <class F> auto as_config_error(F &&f) {
    try {
        return f();
    } catch (const ContractViolation &e) {
        throw ConfigError(e.what());
    }
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

unsigned resolve_threads(unsigned t) { return t ? t : std::max(1u, std::thread::hardware_concurrency()); }

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)> &body) {
    threads = std::min<std::size_t>(resolve_threads(threads), std::max<std::size_t>(n, 1));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i)
            body(i);
        return;
    }
    std::vector<std::thread> pool;
    std::exception_ptr err;
    std::mutex m;
    for (unsigned w = 0; w < threads; ++w)
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < n; i += threads)
                    body(i);
            } catch (...) {
                std::lock_guard lk(m);
                if (!err)
                    err = std::current_exception();
            }
        });
    for (auto &t : pool)
        t.join();
    if (err)
        std::rethrow_exception(err);
}

Phase item_phase(Variant v) { return v == Variant::Masked ? Phase::Masked : Phase::Single; }

std::vector<std::uint8_t> neuron_weights(const BnnModel &model, std::size_t neuron) {
    const auto w = model.layer(0).weights(neuron);
    return {w.begin(), w.end()};
}

std::vector<std::size_t> checkpoints_for(const CampaignConfig &c) {
    return c.checkpoints.step ? stepped_checkpoints(c.n_traces, c.checkpoints.step)
                              : fractional_checkpoints(c.n_traces, c.checkpoints.fraction);
}

std::string crossing_text(const std::optional<std::size_t> &c) { return c ? std::to_string(*c) : "none"; }

} // namespace

std::string_view to_string(AttackKind k) {
    switch (k) {
    case AttackKind::Cpa1:
        return "cpa1";
    case AttackKind::Cpa2:
        return "cpa2";
    case AttackKind::Dom:
        return "dom";
    }
    return "?";
}

std::string_view to_string(TargetKind k) {
    switch (k) {
    case TargetKind::Tree:
        return "tree";
    case TargetKind::Activation:
        return "activation";
    case TargetKind::Bias:
        return "bias";
    case TargetKind::Msb:
        return "msb";
    }
    return "?";
}

std::string_view to_string(Verdict v) { return v == Verdict::Recovered ? "recovered" : "inconclusive"; }

const std::vector<std::string> &config_keys() {
    static const std::vector<std::string> keys{
        "variant",       "prng",          "model.seed",   "model.file",      "image.seed",   "mask.seed",
        "noise.seed",    "traces",        "sigma",        "epsilon",         "leakage",      "include",
        "attack",        "target",        "target.layer", "target.neuron",   "target.stage", "target.register",
        "bias.range",    "resolve",       "window.before", "window.after",   "checkpoints",  "threads",
        "output"};
    return keys;
}

void set_config_value(CampaignConfig &c, std::string_view key, std::string_view raw) {
    const std::string v = trim(raw);
    if (key == "variant")
        c.variant = as_config_error([&] { return variant_from_string(v); });
    else if (key == "prng")
        c.prng = as_config_error([&] { return prng_mode_from_string(v); });
    else if (key == "model.seed")
        c.model_seed = parse_number<std::uint64_t>(key, v);
    else if (key == "model.file")
        c.model_file = v;
    else if (key == "image.seed")
        c.image_seed = parse_number<std::uint64_t>(key, v);
    else if (key == "mask.seed")
        c.mask_seed = parse_number<std::uint64_t>(key, v);
    else if (key == "noise.seed")
        c.noise_seed = parse_number<std::uint64_t>(key, v);
    else if (key == "traces")
        c.n_traces = parse_number<std::size_t>(key, v);
    else if (key == "sigma")
        c.sigma = parse_number<double>(key, v);
    else if (key == "epsilon")
        c.epsilon = parse_number<double>(key, v);
    else if (key == "leakage")
        c.leakage = as_config_error([&] { return leakage_kind_from_string(v); });
    else if (key == "include") {
        c.include.clear();
        if (!v.empty())
            for (auto &g : split(v, ','))
                if (!g.empty())
                    c.include.push_back(g);
    } else if (key == "attack") {
        if (v == "cpa1")
            c.attack = AttackKind::Cpa1;
        else if (v == "cpa2")
            c.attack = AttackKind::Cpa2;
        else if (v == "dom")
            c.attack = AttackKind::Dom;
        else
            throw ConfigError("attack: expected cpa1, cpa2 or dom");
    } else if (key == "target") {
        if (v == "tree")
            c.target = TargetKind::Tree;
        else if (v == "activation")
            c.target = TargetKind::Activation;
        else if (v == "bias")
            c.target = TargetKind::Bias;
        else if (v == "msb")
            c.target = TargetKind::Msb;
        else
            throw ConfigError("target: expected tree, activation, bias or msb");
    } else if (key == "target.layer")
        c.layer = parse_number<std::size_t>(key, v);
    else if (key == "target.neuron")
        c.neuron = parse_number<std::size_t>(key, v);
    else if (key == "target.stage")
        c.stage = parse_number<unsigned>(key, v);
    else if (key == "target.register") {
        if (v == "all")
            c.reg.reset();
        else
            c.reg = parse_number<std::size_t>(key, v);
    } else if (key == "bias.range") {
        if (v == "truth")
            c.bias_range.reset();
        else {
            const auto colon = v.find(':', 1);
            if (colon == std::string::npos)
                throw ConfigError("bias.range: expected 'truth' or 'lo:hi'");
            c.bias_range = std::pair{parse_number<std::int32_t>(key, v.substr(0, colon)),
                                     parse_number<std::int32_t>(key, v.substr(colon + 1))};
        }
    } else if (key == "resolve")
        c.resolve = parse_bool(key, v);
    else if (key == "window.before")
        c.window_before = parse_number<std::size_t>(key, v);
    else if (key == "window.after")
        c.window_after = parse_number<std::size_t>(key, v);
    else if (key == "checkpoints") {
        const auto colon = v.find(':');
        const std::string kind = v.substr(0, colon);
        const std::string arg = colon == std::string::npos ? "" : v.substr(colon + 1);
        if (kind == "fraction")
            c.checkpoints = {parse_number<double>(key, arg), 0};
        else if (kind == "step")
            c.checkpoints = {0.05, parse_number<std::size_t>(key, arg)};
        else
            throw ConfigError("checkpoints: expected 'fraction:F' or 'step:N'");
    } else if (key == "threads")
        c.threads = parse_number<unsigned>(key, v);
    else if (key == "output")
        c.output = v;
    else
        throw ConfigError("unknown key '" + std::string(key) + "'");
}

std::string get_config_value(const CampaignConfig &c, std::string_view key) {
    if (key == "variant")
        return std::string(to_string(c.variant));
    if (key == "prng")
        return std::string(to_string(c.prng));
    if (key == "model.seed")
        return std::to_string(c.model_seed);
    if (key == "model.file")
        return c.model_file;
    if (key == "image.seed")
        return std::to_string(c.image_seed);
    if (key == "mask.seed")
        return std::to_string(c.mask_seed);
    if (key == "noise.seed")
        return std::to_string(c.noise_seed);
    if (key == "traces")
        return std::to_string(c.n_traces);
    if (key == "sigma")
        return format_double(c.sigma);
    if (key == "epsilon")
        return format_double(c.epsilon);
    if (key == "leakage")
        return std::string(to_string(c.leakage));
    if (key == "include") {
        std::string s;
        for (std::size_t i = 0; i < c.include.size(); ++i)
            s += (i ? "," : "") + c.include[i];
        return s;
    }
    if (key == "attack")
        return std::string(to_string(c.attack));
    if (key == "target")
        return std::string(to_string(c.target));
    if (key == "target.layer")
        return std::to_string(c.layer);
    if (key == "target.neuron")
        return std::to_string(c.neuron);
    if (key == "target.stage")
        return std::to_string(c.stage);
    if (key == "target.register")
        return c.reg ? std::to_string(*c.reg) : "all";
    if (key == "bias.range")
        return c.bias_range ? std::to_string(c.bias_range->first) + ":" + std::to_string(c.bias_range->second)
                            : "truth";
    if (key == "resolve")
        return c.resolve ? "true" : "false";
    if (key == "window.before")
        return std::to_string(c.window_before);
    if (key == "window.after")
        return std::to_string(c.window_after);
    if (key == "checkpoints")
        return c.checkpoints.step ? "step:" + std::to_string(c.checkpoints.step)
                                  : "fraction:" + format_double(c.checkpoints.fraction);
    if (key == "threads")
        return std::to_string(c.threads);
    if (key == "output")
        return c.output;
    throw ConfigError("unknown key '" + std::string(key) + "'");
}

CampaignConfig parse_config(std::string_view text) {
    CampaignConfig c;
    std::vector<std::string> seen;
    std::size_t line_no = 0;
    for (const auto &line : split(text, '\n')) {
        ++line_no;
        if (line.empty() || line.front() == '#')
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
        const std::string key = trim(std::string_view(line).substr(0, eq));
        if (std::find(seen.begin(), seen.end(), key) != seen.end())
            throw ConfigError("line " + std::to_string(line_no) + ": '" + key + "' given twice");
        seen.push_back(key);
        try {
            set_config_value(c, key, std::string_view(line).substr(eq + 1));
        } catch (const ConfigError &e) {
            throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return c;
}

CampaignConfig load_config(const fs::path &path) {
    const auto bytes = io::read_file(path);
    try {
        return parse_config(std::string_view(reinterpret_cast<const char *>(bytes.data()), bytes.size()));
    } catch (const ConfigError &e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

std::string to_text(const CampaignConfig &c) {
    std::string s;
    for (const auto &k : config_keys())
        s += k + " = " + get_config_value(c, k) + "\n";
    return s;
}

void validate(const CampaignConfig &c) {
    if (c.n_traces < 4)
        throw ConfigError("traces: at least 4 required");
    if (!(c.sigma >= 0))
        throw ConfigError("sigma: must be >= 0");
    if (!(c.epsilon >= 0))
        throw ConfigError("epsilon: must be >= 0");
    if (c.checkpoints.step == 0 && !(c.checkpoints.fraction > 0 && c.checkpoints.fraction <= 1))
        throw ConfigError("checkpoints: fraction must be in (0, 1]");
    if (c.layer != 0)
        throw ConfigError("target.layer: only first-layer targets have attacker-known inputs");
    if ((c.attack == AttackKind::Dom) != (c.target == TargetKind::Msb))
        throw ConfigError("attack dom goes with target msb and only with it");
    if (c.target == TargetKind::Tree && (c.stage < 1 || c.stage > kMaxAttackStage))
        throw ConfigError("target.stage: tree hypotheses need a stage in 1.." + std::to_string(kMaxAttackStage));
    if (c.target == TargetKind::Tree && c.resolve && !c.reg && c.window_after < 1)
        throw ConfigError("resolve needs window.after >= 1 to record the next stage");
    if (c.target == TargetKind::Msb && !c.reg)
        throw ConfigError("target.register: msb targets need a register index");
    if ((c.target == TargetKind::Activation || c.target == TargetKind::Bias) && c.neuron != 0)
        throw ConfigError("target.neuron: activation and bias targets support neuron 0 only");
    if (c.target == TargetKind::Bias && !c.bias_range)
        throw ConfigError("bias.range: bias targets need a candidate range");
    if (c.bias_range && c.bias_range->first > c.bias_range->second)
        throw ConfigError("bias.range: lo > hi");
    if (c.output.empty())
        throw ConfigError("output: directory required");
}

void validate(const CampaignConfig &c, const BnnModel &model) {
    validate(c);
    if (c.neuron >= model.layer(0).fan_out())
        throw ConfigError("target.neuron: layer 0 has " + std::to_string(model.layer(0).fan_out()) + " neurons");
    const Accelerator acc(model, c.variant);
    if (c.target == TargetKind::Msb && (c.stage < 1 || c.stage >= acc.depth()))
        throw ConfigError("target.stage: msb targets need an inner stage");
    if (c.reg && (c.target == TargetKind::Tree || c.target == TargetKind::Msb) &&
        *c.reg >= acc.stage_size(c.stage))
        throw ConfigError("target.register: stage " + std::to_string(c.stage) + " has " +
                          std::to_string(acc.stage_size(c.stage)) + " registers");
    const auto tc = target_cycle(acc, c);
    if (tc < std::int64_t(c.window_before))
        throw ConfigError("window.before reaches before cycle 0");
}

BnnModel campaign_model(const CampaignConfig &c) {
    return c.model_file.empty() ? generate_model(c.model_seed) : load_model(c.model_file);
}

TraceSeeds trace_seeds(const CampaignConfig &c, std::size_t i) {
    const auto site = site_id(SiteKind::Trace, 0, static_cast<std::uint32_t>(i));
    return {derive_seed(c.image_seed, site), derive_seed(c.mask_seed, site), derive_seed(c.noise_seed, site)};
}

std::int64_t target_cycle(const Accelerator &acc, const CampaignConfig &c) {
    const Phase ph = item_phase(c.variant);
    switch (c.target) {
    case TargetKind::Tree:
    case TargetKind::Msb:
        return acc.tree_cycle(0, ph, c.neuron, c.stage);
    case TargetKind::Bias:
        return acc.tree_cycle(0, ph, c.neuron, acc.depth());
    case TargetKind::Activation:
        return c.variant == Variant::Masked ? acc.activation_cycle(0, c.neuron, acc.final_width() - 1)
                                            : acc.activation_cycle(0, c.neuron);
    }
    return 0;
}

Window campaign_window(const Accelerator &acc, const CampaignConfig &c) {
    const auto tc = target_cycle(acc, c);
    return {tc - std::int64_t(c.window_before), tc + std::int64_t(c.window_after) + 1};
}

std::map<std::string, std::string> campaign_metadata(const CampaignConfig &c, const BnnModel &model) {
    const Accelerator acc(model, c.variant);
    const Window w = campaign_window(acc, c);
    std::map<std::string, std::string> m;
    for (const char *k : {"variant", "prng", "image.seed", "mask.seed", "noise.seed", "traces", "sigma", "epsilon",
                          "leakage", "include"})
        m[k] = get_config_value(c, k);
    m["model.hash"] = hex64(model_hash(model));
    m["window.begin"] = std::to_string(w.begin);
    m["window.end"] = std::to_string(w.end);
    return m;
}

TraceSet simulate_campaign(const CampaignConfig &c, const BnnModel &model) {
    validate(c, model);
    const Accelerator acc(model, c.variant);
    const Window w = campaign_window(acc, c);
    LeakageModel lm;
    lm.kind = c.leakage;
    lm.epsilon = c.epsilon;
    lm.sigma = c.sigma;
    lm.include = c.include;
    const auto interest = acc.registers().select(c.include);

    TraceSet set;
    set.n_traces = c.n_traces;
    set.n_samples = std::size_t(w.end - w.begin);
    set.samples.resize(set.n_traces * set.n_samples);
    set.inputs.resize(set.n_traces);
    set.metadata = campaign_metadata(c, model);
    set.metadata["model.seed"] = c.model_file.empty() ? std::to_string(c.model_seed) : "file";
    set.metadata["target.cycle"] = std::to_string(target_cycle(acc, c));

    parallel_for(c.n_traces, c.threads, [&](std::size_t i) {
        const auto seeds = trace_seeds(c, i);
        set.inputs[i] = generate_image(seeds.image, model.input_width());
        LeakageSink sink(acc.registers(), lm);
        acc.simulate(set.inputs[i], seeds.mask, c.prng, w, interest, sink);
        std::vector<double> s = sink.samples();
        expects(s.size() == set.n_samples, "simulation produced a short trace");
        add_noise(s, c.sigma, seeds.noise);
        auto row = set.row(i);
        std::copy(s.begin(), s.end(), row.begin());
    });
    return set;
}

namespace {

class CaptureSink : public CycleSink {
  public:
    explicit CaptureSink(std::size_t regs) : curr(regs, 0) {}
    void begin_cycle(std::int64_t) override {}
    void load(std::uint32_t reg, std::uint64_t, std::uint64_t c) override { curr[reg] = c; }
    std::vector<std::uint64_t> curr;
};

} // namespace

std::vector<std::uint8_t> msb_labels(const CampaignConfig &c, const BnnModel &model, const TraceSet &traces) {
    expects(c.target == TargetKind::Msb && c.reg.has_value(), "msb labels need an msb target");
    const Accelerator acc(model, c.variant);
    const auto &map = acc.registers();
    const std::string name = "tree.s" + std::to_string(c.stage) + ".r" + std::to_string(*c.reg);
    const auto lid = map.find_logical(name);
    expects(lid.has_value(), "msb target register does not exist");
    const auto &lr = map.logical(*lid);
    std::vector<std::uint8_t> interest(map.size(), 0);
    for (auto p : lr.parts)
        interest[p] = 1;
    const auto tc = target_cycle(acc, c);

    std::vector<std::uint8_t> labels(traces.n_traces);
    parallel_for(traces.n_traces, c.threads, [&](std::size_t i) {
        CaptureSink sink(map.size());
        acc.simulate(traces.inputs[i], trace_seeds(c, i).mask, c.prng, {tc, tc + 1}, interest, sink);
        std::vector<std::uint64_t> parts;
        for (auto p : lr.parts)
            parts.push_back(sink.curr[p]);
        labels[i] = map.combine(*lid, parts) < 0 ? 1 : 0;
    });
    return labels;
}

namespace {

std::string time_csv(const AttackResult &r, const HypothesisSpace &space, std::int64_t begin) {
    std::ostringstream o;
    o << "guess";
    for (std::size_t t = 0; t < r.surface.samples; ++t)
        o << ',' << begin + std::int64_t(t);
    o << '\n';
    o.precision(10);
    for (std::size_t g = 0; g < r.surface.guesses; ++g) {
        o << space.label(g);
        for (std::size_t t = 0; t < r.surface.samples; ++t)
            o << ',' << r.surface.at(g, t);
        o << '\n';
    }
    return o.str();
}

std::string checkpoint_csv(const AttackResult &r, const HypothesisSpace &space, std::size_t sample) {
    std::ostringstream o;
    o << "guess";
    for (auto n : r.surface.checkpoints)
        o << ',' << n;
    o << '\n';
    o.precision(10);
    o << "threshold";
    for (auto n : r.surface.checkpoints)
        o << ',' << (n >= 4 ? confidence_threshold(n) : 1.0);
    o << '\n';
    for (std::size_t g = 0; g < r.surface.guesses; ++g) {
        o << space.label(g);
        for (std::size_t k = 0; k < r.surface.checkpoints.size(); ++k)
            o << ',' << r.surface.evolution_at(k, g, sample);
        o << '\n';
    }
    return o.str();
}

void check_metadata(const CampaignConfig &c, const BnnModel &model, const TraceSet &traces) {
    std::string diff;
    for (const auto &[k, v] : campaign_metadata(c, model)) {
        auto it = traces.metadata.find(k);
        const std::string have = it == traces.metadata.end() ? "<missing>" : it->second;
        if (have != v)
            diff += "\n  " + k + ": traces have '" + have + "', config gives '" + v + "'";
    }
    if (traces.n_traces != c.n_traces)
        diff += "\n  trace count: file holds " + std::to_string(traces.n_traces);
    if (!diff.empty())
        throw DataError("traces were not produced by this configuration:" + diff);
}

} // namespace

CampaignOutcome run_attack(const CampaignConfig &c, const BnnModel &model, const TraceSet &traces) {
    validate(c, model);
    check_metadata(c, model, traces);
    const Accelerator acc(model, c.variant);
    const Window w = campaign_window(acc, c);
    const std::size_t target = c.window_before;

    AttackOptions opt;
    opt.checkpoints = checkpoints_for(c);
    opt.threads = c.threads;
    opt.target_sample = target;

    CampaignOutcome out;
    std::ostringstream sum;
    sum << "variant: " << to_string(c.variant) << "\nprng: " << to_string(c.prng) << "\nattack: "
        << to_string(c.attack) << "\ntarget: " << to_string(c.target) << "\nneuron: " << c.neuron
        << "\ntraces: " << traces.n_traces << "\nwindow.begin: " << w.begin << "\ntarget.cycle: " << w.begin + std::int64_t(target)
        << "\nthreshold: " << confidence_threshold(traces.n_traces) << '\n';

    if (c.target == TargetKind::Msb) {
        const auto labels = msb_labels(c, model, traces);
        const auto r = difference_of_means(traces, labels, target, opt.checkpoints);
        std::ostringstream d;
        d.precision(10);
        d << "cycle,difference,welch\n";
        for (std::size_t t = 0; t < traces.n_samples; ++t)
            d << w.begin + std::int64_t(t) << ',' << r.difference[t] << ',' << r.welch[t] << '\n';
        out.files[kDomCsv] = d.str();
        std::ostringstream e;
        e.precision(10);
        e << "series";
        for (auto n : r.checkpoints)
            e << ',' << n;
        e << "\nthreshold";
        for (std::size_t k = 0; k < r.checkpoints.size(); ++k)
            e << ',' << r.z;
        e << "\nwelch";
        for (std::size_t k = 0; k < r.checkpoints.size(); ++k)
            e << ',' << r.welch_evolution[k * traces.n_samples + target];
        e << '\n';
        out.files[kCheckpointCsv] = e.str();
        out.verdict = r.crossing ? Verdict::Recovered : Verdict::Inconclusive;
        sum << "welch: " << r.welch[target] << "\nz: " << r.z << "\ncrossing: " << crossing_text(r.crossing) << '\n';
    } else {
        const TraceSet processed = c.attack == AttackKind::Cpa2 ? center_square(traces) : TraceSet{};
        const TraceSet &ts = c.attack == AttackKind::Cpa2 ? processed : traces;

        if (c.target == TargetKind::Tree) {
            const std::size_t reg0 = c.reg.value_or(0);
            TreeHypothesis space(c.variant, c.stage, reg0, model.input_width());
            if (c.neuron > 0)
                space.set_previous(true_tree_guess(model, c.neuron - 1, c.stage, reg0));
            const auto r = cpa_first_order(ts, space, opt);
            out.files[kTimeCsv] = time_csv(r, space, w.begin);
            out.files[kCheckpointCsv] = checkpoint_csv(r, space, target);
            const auto truth = true_tree_guess(model, c.neuron, c.stage, reg0);
            sum << "register: " << reg0 << "\nbest: " << space.label(r.best_guess)
                << "\ninverse: " << space.label(r.inverse_guess) << "\ntruth: " << space.label(truth)
                << "\npeak_rho: " << r.peak_rho << "\ncrossing: " << crossing_text(r.crossing)
                << "\nover_threshold: " << r.guesses_over_threshold << '\n';
            const bool hit = r.best_guess == truth || r.inverse_guess == truth;
            bool recovered = r.crossing && hit;

            if (!c.reg) {
                RecoverySchedule sched;
                sched.stage = c.stage;
                sched.resolve = c.resolve;
                sched.input_width = model.input_width();
                if (c.neuron > 0)
                    sched.previous_weights = neuron_weights(model, c.neuron - 1);
                const auto rec = recover_weights(ts, c.variant, sched, opt);
                std::ostringstream g;
                g << "register,truth,best,inverse,crossing,over_threshold,chosen,ambiguous\n";
                std::size_t up_to_inverse = 0, exact = 0, over = 0, crossed = 0;
                for (const auto &gr : rec.groups) {
                    const auto t = true_tree_guess(model, c.neuron, c.stage, gr.reg);
                    const bool ok = gr.crossing && (gr.best == t || gr.inverse == t);
                    up_to_inverse += ok;
                    exact += gr.crossing && gr.chosen == t;
                    over += gr.over_threshold;
                    crossed += gr.crossing.has_value();
                    g << gr.reg << ',' << t << ',' << gr.best << ',' << gr.inverse << ','
                      << crossing_text(gr.crossing) << ',' << gr.over_threshold << ',' << gr.chosen << ','
                      << (gr.ambiguous ? 1 : 0) << '\n';
                }
                out.files[kGroupsCsv] = g.str();
                const double frac = double(up_to_inverse) / double(rec.groups.size());
                sum << "groups: " << rec.groups.size() << "\ngroups_crossing: " << crossed
                    << "\ngroups_recovered: " << up_to_inverse << "\ngroups_exact: " << exact
                    << "\nguesses_over_threshold: " << over << '\n';
                recovered = frac >= 0.95;
            }
            out.verdict = recovered ? Verdict::Recovered : Verdict::Inconclusive;
        } else {
            const std::int32_t truth = model.layer(0).bias(c.neuron);
            const auto [lo, hi] = c.bias_range.value_or(std::pair{truth, truth});
            BiasCandidates cand(neuron_weights(model, c.neuron), lo, hi);
            const unsigned leak = c.variant == Variant::Masked ? acc.final_width() - 1 : acc.final_width();
            std::unique_ptr<HypothesisSpace> space;
            if (c.target == TargetKind::Bias)
                space = std::make_unique<BiasHypothesis>(cand, leak);
            else
                space = std::make_unique<ActivationHypothesis>(cand);
            const bool ranged = c.bias_range.has_value();
            const BiasEstimate est =
                ranged ? recover_bias(ts, cand, c.target == TargetKind::Bias ? BiasMode::HammingWeight : BiasMode::Sign,
                                      leak, opt)
                       : BiasEstimate{false, truth, truth, truth, 0.0, cpa_first_order(ts, *space, opt)};
            const auto &r = est.attack;
            out.files[kTimeCsv] = time_csv(r, *space, w.begin);
            out.files[kCheckpointCsv] = checkpoint_csv(r, *space, target);
            sum << "truth: " << truth << "\nbest: " << est.value << "\ninterval: " << est.lo << ':' << est.hi
                << "\npeak_rho: " << r.peak_rho << "\ncrossing: " << crossing_text(r.crossing)
                << "\nover_threshold: " << r.guesses_over_threshold << '\n';
            bool recovered;
            if (!ranged)
                recovered = r.crossing.has_value();
            else if (c.target == TargetKind::Bias)
                recovered = est.conclusive && est.value == truth;
            else
                recovered = est.conclusive && est.lo <= truth && truth <= est.hi;
            out.verdict = recovered ? Verdict::Recovered : Verdict::Inconclusive;
        }
    }
    sum << "verdict: " << to_string(out.verdict) << '\n';
    out.summary = sum.str();
    out.files[kSummaryFile] = out.summary;
    return out;
}

void cmd_gen_model(std::uint64_t seed, const fs::path &path) { save_model(generate_model(seed), path); }

fs::path cmd_simulate(const CampaignConfig &c) {
    validate(c);
    const BnnModel model = campaign_model(c);
    validate(c, model);
    const TraceSet set = simulate_campaign(c, model);
    const fs::path dir = c.output;
    fs::create_directories(dir);
    const fs::path path = dir / kTraceFile;
    save_traces(set, path);
    io::write_text_atomic(dir / kConfigFile, to_text(c));
    return path;
}

CampaignOutcome cmd_attack(const CampaignConfig &c, const fs::path &traces_path) {
    validate(c);
    const BnnModel model = campaign_model(c);
    validate(c, model);
    const TraceSet traces = load_traces(traces_path);
    auto out = run_attack(c, model, traces);
    const fs::path dir = c.output;
    fs::create_directories(dir);
    for (const auto &[name, text] : out.files)
        io::write_text_atomic(dir / name, text);
    return out;
}

namespace {

std::vector<std::vector<std::string>> read_csv(const fs::path &path) {
    const auto bytes = io::read_file(path);
    std::vector<std::vector<std::string>> rows;
    for (const auto &line : split(std::string_view(reinterpret_cast<const char *>(bytes.data()), bytes.size()), '\n'))
        if (!line.empty())
            rows.push_back(split(line, ','));
    if (rows.empty())
        throw DataError(path.string() + ": empty table");
    for (const auto &r : rows)
        if (r.size() != rows.front().size())
            throw DataError(path.string() + ": ragged table");
    return rows;
}

void emit_series(const fs::path &csv, const fs::path &out_dir, const std::string &prefix,
                 std::vector<fs::path> &written) {
    const auto rows = read_csv(csv);
    const auto &head = rows.front();
    for (std::size_t r = 1; r < rows.size(); ++r) {
        std::string text;
        for (std::size_t k = 1; k < head.size(); ++k)
            text += head[k] + ' ' + rows[r][k] + '\n';
        const fs::path p = out_dir / (prefix + rows[r][0] + ".dat");
        io::write_text_atomic(p, text);
        written.push_back(p);
    }
}

} // namespace

std::vector<fs::path> cmd_report(const fs::path &dir) {
    if (!fs::is_directory(dir))
        throw IoError(dir.string() + ": not a directory");
    if (!fs::exists(dir / kSummaryFile))
        throw DataError(dir.string() + ": no attack results (" + kSummaryFile + " missing)");
    const fs::path out = dir / kPlotDir;
    fs::create_directories(out);
    std::vector<fs::path> written;
    if (fs::exists(dir / kTimeCsv))
        emit_series(dir / kTimeCsv, out, "time_", written);
    if (fs::exists(dir / kCheckpointCsv))
        emit_series(dir / kCheckpointCsv, out, "checkpoints_", written);
    if (fs::exists(dir / kDomCsv)) {
        const auto rows = read_csv(dir / kDomCsv);
        std::string diff, welch;
        for (std::size_t r = 1; r < rows.size(); ++r) {
            diff += rows[r][0] + ' ' + rows[r][1] + '\n';
            welch += rows[r][0] + ' ' + rows[r][2] + '\n';
        }
        io::write_text_atomic(out / "dom_difference.dat", diff);
        io::write_text_atomic(out / "dom_welch.dat", welch);
        written.push_back(out / "dom_difference.dat");
        written.push_back(out / "dom_welch.dat");
    }
    io::write_text_atomic(out / "overhead.txt", latency_table());
    written.push_back(out / "overhead.txt");
    return written;
}

std::string latency_table(const std::vector<std::size_t> &dims) {
    const auto u = latency(Variant::Unmasked, dims);
    const auto m = latency(Variant::Masked, dims);
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-10s %8s %8s\n%-10s %8lld %8.2f\n%-10s %8lld %8.2f\n", "design", "cycles",
                  "overhead", "unmasked", static_cast<long long>(u), 1.0, "masked", static_cast<long long>(m),
                  double(m) / double(u));
    return buf;
}

} // namespace bnnsca
