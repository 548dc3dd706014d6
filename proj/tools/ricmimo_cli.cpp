// SPDX-License-Identifier: Apache-2.0
//
// ricmimo - multi-cell Massive MIMO uplink under spatially correlated Rician fading
// Copyright (C) 2026 The ricmimo authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

// Command-line front end: fig1, fig2, validate and dump-network.
//
// Exit codes: 0 success, 1 configuration error, 2 validation failure, 3 I/O error.

#include "ricmimo/ricmimo.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitValidation = 2;
constexpr int kExitIo = 3;

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CommonFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out;
    int threads = 1;
};

ricmimo::ExperimentConfig load(const CommonFlags& flags, ricmimo::Preset fallback) {
    ricmimo::ExperimentConfig cfg;
    if (flags.config_path.empty()) {
        cfg = ricmimo::preset_config(fallback);
    } else {
        std::ifstream is(flags.config_path);
        if (!is) {
            throw IoError("cannot open config file '" + flags.config_path + "'");
        }
        try {
            cfg = ricmimo::parse_config(is);
        } catch (const ricmimo::InvalidConfiguration& e) {
            throw ricmimo::InvalidConfiguration(flags.config_path + ": " + e.what());
        }
    }
    if (flags.seed) cfg.seed = *flags.seed;
    if (!flags.out.empty()) cfg.output = flags.out;
    cfg.validate();
    return cfg;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) {
        throw IoError("cannot open '" + path + "' for writing");
    }
    os << content;
    os.flush();
    if (!os) {
        throw IoError("error while writing '" + path + "'");
    }
}

int run_fig1(const CommonFlags& flags) {
    const auto cfg = load(flags, ricmimo::Preset::paper_fig1);
    const auto result = ricmimo::run_fig1(cfg, flags.threads);
    std::ostringstream csv;
    ricmimo::write_fig1_csv(result, csv);
    write_file(cfg.output, csv.str());
    write_file(cfg.output + ".gp", ricmimo::plot_script(cfg.output, ricmimo::PlotKind::fig1));
    std::cerr << "wrote " << cfg.output << " (" << result.points.size() << " points) and " << cfg.output << ".gp\n";
    return kExitOk;
}

int run_fig2(const CommonFlags& flags) {
    const auto cfg = load(flags, ricmimo::Preset::paper_fig2);
    const auto result = ricmimo::run_fig2(cfg, flags.threads);
    std::ostringstream csv;
    ricmimo::write_fig2_csv(result, csv);
    write_file(cfg.output, csv.str());
    write_file(cfg.output + ".gp", ricmimo::plot_script(cfg.output, ricmimo::PlotKind::fig2));
    std::cerr << "wrote " << cfg.output << " (M = " << result.M << ") and " << cfg.output << ".gp\n";
    return kExitOk;
}

int run_validate(const CommonFlags& flags) {
    const auto cfg = load(flags, ricmimo::Preset::validate);
    const auto result = ricmimo::run_validate(cfg, flags.threads);
    for (const auto& w : result.warnings) {
        std::cerr << "warning: " << w << "\n";
    }
    std::ostringstream csv;
    ricmimo::write_validate_csv(result, csv);
    write_file(cfg.output, csv.str());
    std::size_t failed = 0;
    for (const auto& row : result.rows) {
        if (!row.result.pass) ++failed;
    }
    std::fprintf(stderr, "%zu comparisons, %zu outside 5 standard errors, max relative error %.3g%%\n",
                 result.rows.size(), failed, 100.0 * result.max_rel_error());
    return result.all_pass() ? kExitOk : kExitValidation;
}

int run_dump(const CommonFlags& flags, std::uint64_t drop) {
    auto cfg = load(flags, ricmimo::Preset::paper_fig1);
    ricmimo::SystemConfig sys = cfg.system;
    sys.M = cfg.max_antennas();
    ricmimo::NetworkOptions opts;
    opts.assignment = cfg.assignment;
    const auto net = ricmimo::realize_network(sys, cfg.seed, drop, opts);
    std::ostringstream os;
    ricmimo::write_network_dump(net, os);
    const std::string path = flags.out.empty() ? "network.txt" : flags.out;
    write_file(path, os.str());
    std::cerr << "wrote " << path << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-cell Massive MIMO uplink SE under spatially correlated Rician fading"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::uint64_t seed_value = 0;
    std::uint64_t drop = 0;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", flags.config_path, "INI experiment config (defaults to the subcommand's preset)");
        sub->add_option("--seed", seed_value, "global seed (overrides the config)");
        sub->add_option("--out", flags.out, "output path (overrides the config)");
        sub->add_option("--threads", flags.threads, "worker threads; affects speed only")->check(CLI::PositiveNumber);
    };
    auto* fig1 = app.add_subcommand("fig1", "average sum SE per cell versus number of BS antennas");
    auto* fig2 = app.add_subcommand("fig2", "CDF of the per-UE SE");
    auto* val = app.add_subcommand("validate", "closed form versus Monte Carlo, per UE");
    auto* dump = app.add_subcommand("dump-network", "write one network realization as text");
    for (auto* sub : {fig1, fig2, val, dump}) add_common(sub);
    dump->add_option("--drop", drop, "drop index to realize");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    for (auto* sub : {fig1, fig2, val, dump}) {
        if (sub->count("--seed") > 0) flags.seed = seed_value;
    }

    try {
        if (fig1->parsed()) return run_fig1(flags);
        if (fig2->parsed()) return run_fig2(flags);
        if (val->parsed()) return run_validate(flags);
        if (dump->parsed()) return run_dump(flags, drop);
    } catch (const ricmimo::InvalidConfiguration& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::ios_base::failure& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return kExitIo;
    }
    return kExitConfig;
}
