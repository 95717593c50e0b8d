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

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

using namespace bnnsca;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string &name) {
    const auto p = fs::temp_directory_path() / ("bnnsca_campaign_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path &p) {
    const auto b = io::read_file(p);
    return {b.begin(), b.end()};
}

CampaignConfig small_campaign(const fs::path &out) {
    CampaignConfig c;
    c.n_traces = 200;
    c.include = {"tree.s2.r4"};
    c.reg = 4;
    c.threads = 1;
    c.output = out.string();
    return c;
}

#ifndef BNNSCA_NO_CLI
int run_cli(const std::string &args) {
    const std::string cmd = std::string(BNNSCA_CLI) + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}
#endif

} // namespace

TEST(Config, TextRoundTrip) {
    CampaignConfig c;
    c.variant = Variant::Masked;
    c.prng = PrngMode::Off;
    c.sigma = 0.1;
    c.epsilon = 0.3;
    c.include = {"tree.s1.*.msb", "act.*"};
    c.reg = 7;
    c.bias_range = std::pair{-20, 35};
    c.checkpoints.step = 50;
    c.output = "some dir";
    const auto back = parse_config(to_text(c));
    EXPECT_EQ(back, c);
    for (const auto &k : config_keys())
        EXPECT_EQ(get_config_value(back, k), get_config_value(c, k)) << k;
}

TEST(Config, ParsesCommentsAndRejectsBadInput) {
    const auto c = parse_config("# campaign\nvariant = masked\n\ntraces=500\nsigma = 2.5\n");
    EXPECT_EQ(c.variant, Variant::Masked);
    EXPECT_EQ(c.n_traces, 500u);
    EXPECT_EQ(c.sigma, 2.5);
    EXPECT_THROW(parse_config("traces = 5\ntraces = 6\n"), ConfigError);
    EXPECT_THROW(parse_config("colour = red\n"), ConfigError);
    EXPECT_THROW(parse_config("traces 5\n"), ConfigError);
    EXPECT_THROW(parse_config("traces = many\n"), ConfigError);
    EXPECT_THROW(parse_config("variant = half\n"), ConfigError);
    EXPECT_THROW(parse_config("checkpoints = every:3\n"), ConfigError);
}

TEST(Config, ValidationRules) {
    CampaignConfig c;
    EXPECT_NO_THROW(validate(c));
    auto bad = [&](auto edit) {
        CampaignConfig x;
        edit(x);
        EXPECT_THROW(validate(x), ConfigError);
    };
    bad([](CampaignConfig &x) { x.n_traces = 3; });
    bad([](CampaignConfig &x) { x.sigma = -1; });
    bad([](CampaignConfig &x) { x.layer = 1; });
    bad([](CampaignConfig &x) { x.attack = AttackKind::Dom; });
    bad([](CampaignConfig &x) { x.target = TargetKind::Msb; });
    bad([](CampaignConfig &x) { x.stage = 4; });
    bad([](CampaignConfig &x) { x.window_after = 0; });
    bad([](CampaignConfig &x) { x.target = TargetKind::Bias; x.neuron = 1; });
    bad([](CampaignConfig &x) { x.output.clear(); });

    CampaignConfig far;
    far.neuron = 5000;
    EXPECT_THROW(validate(far, generate_model(1)), ConfigError);
    CampaignConfig reg;
    reg.reg = 196;
    EXPECT_THROW(validate(reg, generate_model(1)), ConfigError);
}

TEST(Campaign, SeedsAndWindow) {
    CampaignConfig c;
    const auto a = trace_seeds(c, 0), b = trace_seeds(c, 1);
    EXPECT_NE(a.image, b.image);
    EXPECT_NE(a.image, a.noise);
    const Accelerator acc(generate_model(1), Variant::Unmasked);
    c.window_before = 2;
    c.window_after = 3;
    const auto w = campaign_window(acc, c);
    EXPECT_EQ(w.begin, acc.tree_cycle(0, Phase::Single, 0, 2) - 2);
    EXPECT_EQ(w.end - w.begin, 6);
}

TEST(Campaign, SimulationIsDeterministic) {
    const auto dir = scratch("det");
    auto c = small_campaign(dir);
    const auto model = campaign_model(c);
    const auto a = simulate_campaign(c, model);
    c.threads = 3;
    const auto b = simulate_campaign(c, model);
    EXPECT_EQ(a, b);
    EXPECT_EQ(a.n_samples, 2u);
    EXPECT_EQ(a.metadata.at("variant"), "unmasked");
    EXPECT_EQ(a.metadata.at("traces"), "200");
    EXPECT_TRUE(a.metadata.count("model.hash"));

    c.threads = 1;
    const auto p1 = cmd_simulate(c);
    const auto first = io::read_file(p1);
    cmd_simulate(c);
    EXPECT_EQ(io::read_file(p1), first);
    EXPECT_EQ(load_config(dir / kConfigFile), c);
    fs::remove_all(dir);
}

TEST(Campaign, AttackRefusesForeignTraces) {
    const auto dir = scratch("foreign");
    auto c = small_campaign(dir);
    const auto p = cmd_simulate(c);
    auto other = c;
    other.sigma = 1.0;
    EXPECT_THROW(cmd_attack(other, p), DataError);
    other = c;
    other.model_seed = 9;
    EXPECT_THROW(cmd_attack(other, p), DataError);
    other = c;
    other.n_traces = 100;
    EXPECT_THROW(cmd_attack(other, p), DataError);
    fs::remove_all(dir);
}

TEST(Campaign, AttackAndReport) {
    const auto dir = scratch("report");
    auto c = small_campaign(dir);
    c.n_traces = 2000;
    c.sigma = 1.0;
    const auto p = cmd_simulate(c);
    const auto out = cmd_attack(c, p);
    EXPECT_EQ(out.verdict, Verdict::Recovered);
    EXPECT_NE(out.summary.find("verdict: recovered"), std::string::npos);
    EXPECT_EQ(slurp(dir / kSummaryFile), out.summary);

    const auto written = cmd_report(dir);
    std::size_t time_series = 0;
    for (const auto &f : written)
        time_series += f.filename().string().rfind("time_", 0) == 0;
    EXPECT_EQ(time_series, 16u);
    EXPECT_TRUE(fs::exists(dir / kPlotDir / "overhead.txt"));

    // running the report again gives the same files
    const auto before = slurp(dir / kPlotDir / "overhead.txt");
    EXPECT_EQ(cmd_report(dir), written);
    EXPECT_EQ(slurp(dir / kPlotDir / "overhead.txt"), before);
    fs::remove_all(dir);
}

TEST(Campaign, ReportNeedsResults) {
    const auto dir = scratch("empty");
    EXPECT_THROW(cmd_report(dir), IoError);
    fs::create_directories(dir);
    EXPECT_THROW(cmd_report(dir), DataError);
    fs::remove_all(dir);
}

TEST(Campaign, LatencyTable) {
    const auto t = latency_table();
    EXPECT_NE(t.find("3192"), std::string::npos);
    EXPECT_NE(t.find("masked"), std::string::npos);
}

#ifndef BNNSCA_NO_CLI
TEST(Cli, ExitCodes) {
    const auto dir = scratch("cli");
    fs::create_directories(dir);
    const auto model = (dir / "m.bnnm").string();
    EXPECT_EQ(run_cli("gen-model --seed 3 --out " + model), 0);
    EXPECT_EQ(load_model(model), generate_model(3));
    EXPECT_EQ(run_cli(""), 1);
    EXPECT_EQ(run_cli("simulate --traces 2"), 1);
    EXPECT_EQ(run_cli("simulate --bogus 1"), 1);
    const auto out = (dir / "run").string();
    const std::string common = " --traces 100 --include tree.s2.r4 --target.register 4 --threads 1 --output " + out;
    EXPECT_EQ(run_cli("simulate" + common), 0);
    EXPECT_EQ(run_cli("attack" + common), 0);
    EXPECT_EQ(run_cli("attack --sigma 1" + common), 2);
    EXPECT_EQ(run_cli("attack" + common + " --trace-file " + (dir / "none.scat").string()), 2);
    EXPECT_EQ(run_cli("report --dir " + out), 0);
    EXPECT_EQ(run_cli("report --dir " + (dir / "missing").string()), 2);
    std::ofstream(dir / "c.cfg") << "variant = masked\nprng = off\n";
    EXPECT_EQ(run_cli("simulate --config " + (dir / "c.cfg").string() + common), 0);
    EXPECT_EQ(load_config(fs::path(out) / kConfigFile).variant, Variant::Masked);
    fs::remove_all(dir);
}
#endif
