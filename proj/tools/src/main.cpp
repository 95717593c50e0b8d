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

#include <CLI11.hpp>

#include <iostream>
#include <map>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitInternal = 3;

struct Overrides {
    std::string config;
    std::map<std::string, std::string> values;
};

void add_campaign_flags(CLI::App &cmd, Overrides &ov) {
    cmd.add_option("--config", ov.config, "campaign file (key = value lines)");
    for (const auto &key : bnnsca::config_keys())
        cmd.add_option("--" + key, ov.values[key], "override '" + key + "'");
}

bnnsca::CampaignConfig resolve(const Overrides &ov, CLI::App &cmd) {
    bnnsca::CampaignConfig c = ov.config.empty() ? bnnsca::CampaignConfig{} : bnnsca::load_config(ov.config);
    for (const auto &key : bnnsca::config_keys())
        if (cmd.get_option("--" + key)->count() > 0)
            bnnsca::set_config_value(c, key, ov.values.at(key));
    bnnsca::validate(c);
    return c;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Simulate and attack binarized neural network accelerators"};
    app.require_subcommand(1);

    auto *gen = app.add_subcommand("gen-model", "write a random model");
    std::uint64_t seed = 1;
    std::string model_out;
    gen->add_option("--seed", seed, "generator seed");
    gen->add_option("--out", model_out, "model file")->required();

    auto *sim = app.add_subcommand("simulate", "simulate a trace campaign");
    Overrides sim_ov;
    add_campaign_flags(*sim, sim_ov);

    auto *att = app.add_subcommand("attack", "attack a trace campaign");
    Overrides att_ov;
    std::string traces;
    add_campaign_flags(*att, att_ov);
    att->add_option("--trace-file", traces, "trace file (default: <output>/traces.scat)");

    auto *rep = app.add_subcommand("report", "turn attack results into plot data");
    std::string dir;
    rep->add_option("--dir", dir, "attack output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*gen) {
            bnnsca::cmd_gen_model(seed, model_out);
            std::cout << model_out << '\n';
        } else if (*sim) {
            const auto c = resolve(sim_ov, *sim);
            std::cout << bnnsca::cmd_simulate(c).string() << '\n';
        } else if (*att) {
            const auto c = resolve(att_ov, *att);
            const std::filesystem::path p =
                traces.empty() ? std::filesystem::path(c.output) / bnnsca::kTraceFile : std::filesystem::path(traces);
            std::cout << bnnsca::cmd_attack(c, p).summary;
        } else if (*rep) {
            for (const auto &p : bnnsca::cmd_report(dir))
                std::cout << p.string() << '\n';
        }
    } catch (const bnnsca::ConfigError &e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const bnnsca::DataError &e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const bnnsca::FormatError &e) {
        std::cerr << "format error: " << e.what() << '\n';
        return kExitData;
    } catch (const bnnsca::IoError &e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::filesystem::filesystem_error &e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return kExitData;
    } catch (const bnnsca::ContractViolation &e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return kExitInternal;
    } catch (const std::exception &e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return kExitInternal;
    }
    return kExitOk;
}
