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

#include "bnnsca/attack.hpp"
#include "bnnsca/datapath.hpp"
#include "bnnsca/leakage.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace bnnsca {

/// Invalid campaign configuration or usage (exit code 1).
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Inputs that exist but do not fit together (exit code 2).
class DataError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

enum class AttackKind : std::uint8_t { Cpa1, Cpa2, Dom };
/// tree: weight tuple of a stage register; activation: the sign bit over bias
/// candidates; bias: Hamming weight of the bias-add register; msb: the sign
/// bit of a tree register (difference of means).
enum class TargetKind : std::uint8_t { Tree, Activation, Bias, Msb };

std::string_view to_string(AttackKind k);
std::string_view to_string(TargetKind k);

/// Checkpoints every `fraction` of the traces, or every `step` traces.
struct CheckpointSpec {
    double fraction = 0.05;
    std::size_t step = 0;
    bool operator==(const CheckpointSpec &) const = default;
};

/// One trace campaign plus the attack run on it.
///
/// File form: one "key = value" per line, '#' starts a comment line. Keys are
/// those of config_keys(); unknown or repeated keys are errors.
struct CampaignConfig {
    Variant variant = Variant::Unmasked;
    PrngMode prng = PrngMode::On;
    std::uint64_t model_seed = 1;
    std::string model_file; ///< empty: generate from model_seed
    std::uint64_t image_seed = 2;
    std::uint64_t mask_seed = 3;
    std::uint64_t noise_seed = 4;
    std::size_t n_traces = 10000;
    double sigma = 4.0;
    double epsilon = 0.0;
    LeakageKind leakage = LeakageKind::HammingDistance;
    std::vector<std::string> include;

    AttackKind attack = AttackKind::Cpa1;
    TargetKind target = TargetKind::Tree;
    std::size_t layer = 0;
    std::size_t neuron = 0;
    unsigned stage = 2;
    std::optional<std::size_t> reg; ///< none: every register of the stage
    /// none: the true bias only (white-box)
    std::optional<std::pair<std::int32_t, std::int32_t>> bias_range;
    bool resolve = true;
    std::size_t window_before = 0;
    std::size_t window_after = 1;
    CheckpointSpec checkpoints;
    unsigned threads = 0;
    std::string output = "out";

    bool operator==(const CampaignConfig &) const = default;
};

/// Keys in file order.
const std::vector<std::string> &config_keys();

/// Applies one key; throws ConfigError on unknown keys or bad values.
void set_config_value(CampaignConfig &config, std::string_view key, std::string_view value);
std::string get_config_value(const CampaignConfig &config, std::string_view key);

CampaignConfig parse_config(std::string_view text);
CampaignConfig load_config(const std::filesystem::path &path);
std::string to_text(const CampaignConfig &config);

/// Checks everything that does not need the model.
void validate(const CampaignConfig &config);
/// Checks the target against the model's shape.
void validate(const CampaignConfig &config, const BnnModel &model);

BnnModel campaign_model(const CampaignConfig &config);

struct TraceSeeds {
    std::uint64_t image, mask, noise;
};
TraceSeeds trace_seeds(const CampaignConfig &config, std::size_t trace);

/// Cycle of the targeted load and the recorded window around it.
std::int64_t target_cycle(const Accelerator &acc, const CampaignConfig &config);
Window campaign_window(const Accelerator &acc, const CampaignConfig &config);

/// Metadata a trace set produced by `config` carries.
std::map<std::string, std::string> campaign_metadata(const CampaignConfig &config, const BnnModel &model);

/// Simulates the campaign's traces (parallel over traces, deterministic).
TraceSet simulate_campaign(const CampaignConfig &config, const BnnModel &model);

/// Ground-truth sign bit of the targeted register for each trace (evaluator view).
std::vector<std::uint8_t> msb_labels(const CampaignConfig &config, const BnnModel &model, const TraceSet &traces);

enum class Verdict : std::uint8_t { Recovered, Inconclusive };
std::string_view to_string(Verdict v);

struct CampaignOutcome {
    Verdict verdict = Verdict::Inconclusive;
    std::string summary;                 ///< key: value lines
    std::map<std::string, std::string> files; ///< name -> contents
};

/// Runs the configured attack. Throws DataError when the traces were not
/// produced by this configuration.
CampaignOutcome run_attack(const CampaignConfig &config, const BnnModel &model, const TraceSet &traces);

/// Output layout of one campaign directory.
inline constexpr const char *kTraceFile = "traces.scat";
inline constexpr const char *kConfigFile = "campaign.cfg";
inline constexpr const char *kSummaryFile = "summary.txt";
inline constexpr const char *kTimeCsv = "rho_time.csv";
inline constexpr const char *kCheckpointCsv = "rho_checkpoints.csv";
inline constexpr const char *kGroupsCsv = "groups.csv";
inline constexpr const char *kDomCsv = "dom.csv";
inline constexpr const char *kPlotDir = "plot";

/// Subcommand bodies. Each validates before writing and writes atomically.
void cmd_gen_model(std::uint64_t seed, const std::filesystem::path &path);
std::filesystem::path cmd_simulate(const CampaignConfig &config);
CampaignOutcome cmd_attack(const CampaignConfig &config, const std::filesystem::path &traces);
/// Two-column plot data per series plus the latency table; returns files written.
std::vector<std::filesystem::path> cmd_report(const std::filesystem::path &result_dir);

/// Text table of simulated cycle counts per variant.
std::string latency_table(const std::vector<std::size_t> &dims = kMnistTopology);

} // namespace bnnsca
