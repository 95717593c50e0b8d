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
#include "bnnsca/registers.hpp"

#include <bit>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace bnnsca {

constexpr unsigned hamming_distance(std::uint64_t prev, std::uint64_t curr) { return std::popcount(prev ^ curr); }
constexpr unsigned hamming_weight(std::uint64_t v) { return std::popcount(v); }

enum class LeakageKind : std::uint8_t { HammingDistance, HammingWeight };

std::string_view to_string(LeakageKind k);
LeakageKind leakage_kind_from_string(std::string_view text);

/// Power model. Ordinary registers leak the Hamming distance (or weight) of
/// each load. A dual-rail register charges exactly one rail per bit and load,
/// so it contributes 1 + epsilon * (true rail) per bit.
struct LeakageModel {
    LeakageKind kind = LeakageKind::HammingDistance;
    double epsilon = 0.0;
    double sigma = 4.0;
    /// Register name globs; empty means every register leaks.
    std::vector<std::string> include;
};

/// Turns register loads into one noiseless sample per cycle.
class LeakageSink : public CycleSink {
  public:
    LeakageSink(const RegisterMap &map, const LeakageModel &model);

    void begin_cycle(std::int64_t cycle) override;
    void load(std::uint32_t reg, std::uint64_t prev, std::uint64_t curr) override;

    const std::vector<std::uint8_t> &selection() const { return selected_; }
    const std::vector<double> &samples() const { return samples_; }
    void clear() { samples_.clear(); }

  private:
    const RegisterMap &map_;
    LeakageKind kind_;
    double epsilon_;
    std::vector<std::uint8_t> selected_;
    std::vector<double> samples_;
};

/// Adds N(0, sigma^2) to every sample from a generator seeded with `noise_seed`.
void add_noise(std::span<double> samples, double sigma, std::uint64_t noise_seed);

/// One power trace from a recorded CycleTrace.
std::vector<double> synthesize(const CycleTrace &trace, const RegisterMap &map, const LeakageModel &model,
                               std::uint64_t noise_seed);

/// Traces x samples matrix with the known inputs and campaign metadata.
struct TraceSet {
    std::size_t n_traces = 0;
    std::size_t n_samples = 0;
    std::vector<float> samples; ///< row-major
    std::vector<InputImage> inputs;
    std::map<std::string, std::string> metadata;

    std::span<const float> row(std::size_t i) const { return {samples.data() + i * n_samples, n_samples}; }
    std::span<float> row(std::size_t i) { return {samples.data() + i * n_samples, n_samples}; }

    bool operator==(const TraceSet &) const = default;
};

/// Sibling file holding the inputs: "<path>.inputs".
std::filesystem::path inputs_path(const std::filesystem::path &traces);

void save_traces(const TraceSet &set, const std::filesystem::path &path);
TraceSet load_traces(const std::filesystem::path &path);

} // namespace bnnsca
