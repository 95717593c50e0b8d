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

#include "bnnsca/leakage.hpp"

#include "bnnsca/common.hpp"
#include "bnnsca/io.hpp"
#include "bnnsca/randomness.hpp"

namespace bnnsca {

namespace {

constexpr char kTraceMagic[4] = {'S', 'C', 'A', 'T'};
constexpr std::uint16_t kTraceVersion = 1;
constexpr std::uint8_t kDtypeF32 = 0;

} // namespace

std::string_view to_string(LeakageKind k) { return k == LeakageKind::HammingDistance ? "hd" : "hw"; }

LeakageKind leakage_kind_from_string(std::string_view text) {
    if (text == "hd")
        return LeakageKind::HammingDistance;
    if (text == "hw")
        return LeakageKind::HammingWeight;
    throw ContractViolation("leakage kind must be 'hd' or 'hw'");
}

LeakageSink::LeakageSink(const RegisterMap &map, const LeakageModel &model)
    : map_(map), kind_(model.kind), epsilon_(model.epsilon), selected_(map.select(model.include)) {
    expects(model.epsilon >= 0.0, "dual-rail imbalance must be >= 0");
}

void LeakageSink::begin_cycle(std::int64_t) { samples_.push_back(0.0); }

void LeakageSink::load(std::uint32_t reg, std::uint64_t prev, std::uint64_t curr) {
    if (!selected_[reg] || samples_.empty())
        return;
    const RegisterInfo &ri = map_.info(reg);
    if (ri.kind == RailKind::DualRail) {
        samples_.back() += double(ri.width) + epsilon_ * double(hamming_weight(curr));
        return;
    }
    samples_.back() += kind_ == LeakageKind::HammingDistance ? hamming_distance(prev, curr) : hamming_weight(curr);
}

void add_noise(std::span<double> samples, double sigma, std::uint64_t noise_seed) {
    expects(sigma >= 0.0, "noise sigma must be >= 0");
    if (sigma == 0.0)
        return;
    Xoshiro256 rng(noise_seed);
    for (double &s : samples)
        s += sigma * rng.normal();
}

std::vector<double> synthesize(const CycleTrace &trace, const RegisterMap &map, const LeakageModel &model,
                               std::uint64_t noise_seed) {
    LeakageSink sink(map, model);
    for (std::size_t i = 0; i < trace.cycle_count(); ++i) {
        sink.begin_cycle(trace.cycle(i));
        for (const RegisterLoad &ld : trace.loads(i))
            sink.load(ld.reg, ld.prev, ld.curr);
        sink.end_cycle();
    }
    std::vector<double> out = sink.samples();
    add_noise(out, model.sigma, noise_seed);
    return out;
}

std::filesystem::path inputs_path(const std::filesystem::path &traces) {
    auto p = traces;
    p += ".inputs";
    return p;
}

void save_traces(const TraceSet &set, const std::filesystem::path &path) {
    expects(set.samples.size() == set.n_traces * set.n_samples, "trace set: sample count does not match its shape");
    expects(set.inputs.size() == set.n_traces, "trace set: one input per trace required");
    const std::size_t width = set.inputs.empty() ? 0 : set.inputs.front().pixels.size();
    for (const auto &img : set.inputs)
        expects(img.pixels.size() == width, "trace set: inputs differ in width");

    io::Writer w;
    w.raw({reinterpret_cast<const std::uint8_t *>(kTraceMagic), 4});
    w.u16(kTraceVersion);
    w.u32(static_cast<std::uint32_t>(set.n_traces));
    w.u32(static_cast<std::uint32_t>(set.n_samples));
    w.u8(kDtypeF32);
    for (float v : set.samples)
        w.f32(v);
    auto meta = set.metadata;
    meta["inputs.file"] = inputs_path(path).filename().string();
    meta["inputs.width"] = std::to_string(width);
    w.u32(static_cast<std::uint32_t>(meta.size()));
    for (const auto &[k, v] : meta) {
        expects(k.find('=') == std::string::npos && k.find('\n') == std::string::npos &&
                    v.find('\n') == std::string::npos,
                "trace metadata keys may not contain '=' or newlines");
        const std::string line = k + "=" + v;
        w.u32(static_cast<std::uint32_t>(line.size()));
        w.text(line);
    }

    std::vector<std::uint8_t> in_bytes;
    in_bytes.reserve(set.n_traces * width);
    for (const auto &img : set.inputs)
        in_bytes.insert(in_bytes.end(), img.pixels.begin(), img.pixels.end());
    io::write_file_atomic(inputs_path(path), in_bytes);
    io::write_file_atomic(path, w.bytes());
}

TraceSet load_traces(const std::filesystem::path &path) {
    const auto bytes = io::read_file(path);
    const std::string what = path.string();
    io::Reader in(bytes, what);
    auto magic = in.raw(4);
    if (!std::equal(magic.begin(), magic.end(), kTraceMagic))
        throw FormatError(what + ": bad magic");
    if (const auto v = in.u16(); v != kTraceVersion)
        throw FormatError(what + ": unsupported version " + std::to_string(v));
    TraceSet set;
    set.n_traces = in.u32();
    set.n_samples = in.u32();
    if (const auto d = in.u8(); d != kDtypeF32)
        throw FormatError(what + ": unsupported sample type " + std::to_string(d));
    const std::size_t count = set.n_traces * set.n_samples;
    if (in.remaining() < count * 4)
        throw FormatError(what + ": payload shorter than " + std::to_string(set.n_traces) + " x " +
                          std::to_string(set.n_samples) + " samples");
    set.samples.resize(count);
    for (auto &v : set.samples)
        v = in.f32();
    const std::size_t n_meta = in.u32();
    for (std::size_t i = 0; i < n_meta; ++i) {
        auto raw = in.raw(in.u32());
        const std::string line(raw.begin(), raw.end());
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw FormatError(what + ": metadata line without '='");
        set.metadata[line.substr(0, eq)] = line.substr(eq + 1);
    }
    if (in.remaining() != 0)
        throw FormatError(what + ": trailing bytes");

    std::size_t width = 0;
    try {
        width = std::stoul(set.metadata.at("inputs.width"));
    } catch (const std::exception &) {
        throw FormatError(what + ": missing or bad inputs.width");
    }
    const auto in_bytes = io::read_file(inputs_path(path));
    if (in_bytes.size() != set.n_traces * width)
        throw FormatError(inputs_path(path).string() + ": expected " + std::to_string(set.n_traces * width) +
                          " bytes, found " + std::to_string(in_bytes.size()));
    set.inputs.resize(set.n_traces);
    for (std::size_t i = 0; i < set.n_traces; ++i)
        set.inputs[i].pixels.assign(in_bytes.begin() + std::ptrdiff_t(i * width),
                                    in_bytes.begin() + std::ptrdiff_t((i + 1) * width));
    set.metadata.erase("inputs.file");
    set.metadata.erase("inputs.width");
    return set;
}

} // namespace bnnsca
