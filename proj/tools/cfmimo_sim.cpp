// SPDX-License-Identifier: Apache-2.0
//
// cfmimo - uplink simulator for user-centric cell-free massive MIMO
// Copyright (C) 2026 The cfmimo authors
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

// cfmimo_sim: Monte Carlo campaigns and cost sweeps.
//
//   cfmimo_sim se         --config net.cfg --out results --schemes maduo,c_mmse
//   cfmimo_sim fronthaul  --config net.cfg --k-grid 20,40,60,80,100
//   cfmimo_sim complexity --config net.cfg --k-grid 20,40,60,80,100
//
// Exit codes: 0 success, 2 configuration error, 3 numerical error, 4 I/O error.

#include "cfmimo/io.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <ctime>
#include <iostream>
#include <optional>
#include <sstream>

#ifndef CFMIMO_VERSION
#define CFMIMO_VERSION "0.0.0-dev"
#endif

namespace
{
    using namespace cfmimo;

    enum ExitCode
    {
        exit_ok = 0,
        exit_config = 2,
        exit_numerical = 3,
        exit_io = 4,
    };

    struct Options
    {
        std::string config_path;
        std::optional<std::uint64_t> seed;
        std::string out_dir = ".";
        std::string schemes = "c_mmse,p_mmse,l_mmse,lp_mmse,maduo,maduo_scl";
        std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
        std::string k_grid = "20,40,60,80,100";
        std::vector<std::string> overrides;
        bool dump_assignments = false;
    };

    std::vector<std::string> split_list(const std::string &text)
    {
        std::vector<std::string> out;
        std::string item;
        std::istringstream is(text);
        while (std::getline(is, item, ','))
        {
            item = cfmimo::detail::trim(item);
            if (!item.empty())
                out.push_back(item);
        }
        return out;
    }

    NetworkConfig resolve_config(const Options &opt)
    {
        NetworkConfig cfg = opt.config_path.empty() ? NetworkConfig{} : load_config(opt.config_path);
        for (const auto &kv : opt.overrides)
        {
            const auto eq = kv.find('=');
            if (eq == std::string::npos)
                throw ConfigError("--set " + kv + ": expected KEY=VALUE");
            set_config_value(cfg, detail::trim(kv.substr(0, eq)), detail::trim(kv.substr(eq + 1)), "--set");
        }
        if (opt.seed)
            cfg.seed = *opt.seed;
        cfg.validate();
        return cfg;
    }

    std::vector<Scheme> resolve_schemes(const Options &opt)
    {
        std::vector<Scheme> out;
        for (const auto &name : split_list(opt.schemes))
            out.push_back(parse_scheme(name));
        if (out.empty())
            throw ConfigError("--schemes: empty scheme list");
        return out;
    }

    std::vector<std::size_t> resolve_k_grid(const Options &opt)
    {
        std::vector<std::size_t> out;
        for (const auto &item : split_list(opt.k_grid))
            out.push_back(detail::parse_number<std::size_t>(item, "--k-grid"));
        if (out.empty())
            throw ConfigError("--k-grid: empty grid");
        return out;
    }

    std::string manifest(const std::string &command, const NetworkConfig &cfg, const std::string &schemes,
                         const std::vector<std::string> &outputs, const std::string &extra = {})
    {
        const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        char stamp[32];
        std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
        std::ostringstream os;
        os << "# cfmimo_sim " << CFMIMO_VERSION << '\n'
           << "# command = " << command << '\n'
           << "# schemes = " << schemes << '\n';
        if (!extra.empty())
            os << "# " << extra << '\n';
        os << "# outputs =";
        for (const auto &o : outputs)
            os << ' ' << o;
        os << '\n' << "# started = " << stamp << '\n' << write_config(cfg);
        return os.str();
    }

    void prepare_out_dir(const std::filesystem::path &dir)
    {
        std::error_code ec;
        std::filesystem::create_directories(dir, ec);
        if (ec || !std::filesystem::is_directory(dir))
            throw IoError("cannot create output directory " + dir.string());
    }

    int run_se(const Options &opt)
    {
        const NetworkConfig cfg = resolve_config(opt);
        const auto schemes = resolve_schemes(opt);
        const std::filesystem::path dir(opt.out_dir);
        prepare_out_dir(dir);

        CampaignOptions copt;
        copt.workers = opt.workers;
        std::vector<std::pair<std::string, std::string>> dumps;
        if (opt.dump_assignments)
            copt.on_setup = [&](const SetupContext &ctx) {
                std::ostringstream os;
                write_assignment_csv(os, ctx.assignment);
                dumps.emplace_back("assignment_" + std::to_string(ctx.setup_index) + ".csv", os.str());
            };
        const CampaignResult result = run_campaign(cfg, schemes, copt);

        std::ostringstream samples, cdf_rows;
        write_se_samples_csv(samples, result.se);
        write_se_cdf_csv(cdf_rows, result.se, schemes);
        write_file_atomic(dir / "se_samples.csv", samples.str());
        write_file_atomic(dir / "se_cdf.csv", cdf_rows.str());
        for (const auto &[name, body] : dumps)
            write_file_atomic(dir / name, body);
        write_file_atomic(dir / "manifest.txt",
                          manifest("se", cfg, opt.schemes, {"se_samples.csv", "se_cdf.csv"}));
        std::cout << "wrote " << result.se.size() << " SE rows to " << (dir / "se_samples.csv").string() << '\n';
        return exit_ok;
    }

    int run_sweep(const Options &opt, bool fronthaul_command)
    {
        const NetworkConfig cfg = resolve_config(opt);
        const auto grid = resolve_k_grid(opt);
        const std::filesystem::path dir(opt.out_dir);
        prepare_out_dir(dir);

        std::ostringstream os;
        std::string file;
        if (fronthaul_command)
        {
            write_sweep_csv(os, fronthaul_sweep(cfg, grid), "mean_scalars");
            file = "fronthaul.csv";
        }
        else
        {
            write_sweep_csv(os, complexity_sweep(cfg, grid, resolve_schemes(opt)), "mean_mults");
            file = "complexity.csv";
        }
        write_file_atomic(dir / file, os.str());
        write_file_atomic(dir / "manifest.txt", manifest(fronthaul_command ? "fronthaul" : "complexity", cfg,
                                                         opt.schemes, {file}, "k_grid = " + opt.k_grid));
        std::cout << "wrote " << (dir / file).string() << '\n';
        return exit_ok;
    }
}

int main(int argc, char **argv)
{
    CLI::App app{"Uplink cell-free massive MIMO simulator: spectral efficiency, fronthaul and complexity"};
    app.set_version_flag("--version", std::string(CFMIMO_VERSION));
    app.require_subcommand(1);

    Options opt;
    auto add_common = [&](CLI::App *cmd) {
        cmd->add_option("--config", opt.config_path, "key = value configuration file");
        cmd->add_option("--seed", opt.seed, "override the configured seed");
        cmd->add_option("--out", opt.out_dir, "output directory")->capture_default_str();
        cmd->add_option("--workers", opt.workers, "worker threads (never changes results)")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--set", opt.overrides, "override one config key: KEY=VALUE (repeatable)");
    };

    auto *se = app.add_subcommand("se", "per-UE spectral efficiency and CDFs");
    add_common(se);
    se->add_option("--schemes", opt.schemes, "comma-separated scheme list")->capture_default_str();
    se->add_flag("--dump-assignments", opt.dump_assignments, "write assignment_<setup>.csv per setup");

    auto *fh = app.add_subcommand("fronthaul", "fronthaul scalars per coherence block over a K grid");
    add_common(fh);
    fh->add_option("--k-grid", opt.k_grid, "comma-separated UE counts")->capture_default_str();

    auto *cx = app.add_subcommand("complexity", "complex multiplications per UE over a K grid");
    add_common(cx);
    cx->add_option("--k-grid", opt.k_grid, "comma-separated UE counts")->capture_default_str();
    cx->add_option("--schemes", opt.schemes, "comma-separated scheme list")->capture_default_str();

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::CallForHelp &e)
    {
        return app.exit(e);
    }
    catch (const CLI::CallForVersion &e)
    {
        return app.exit(e);
    }
    catch (const CLI::ParseError &e)
    {
        app.exit(e);
        return exit_config;
    }

    try
    {
        if (se->parsed())
            return run_se(opt);
        if (fh->parsed())
            return run_sweep(opt, true);
        return run_sweep(opt, false);
    }
    catch (const ConfigError &e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return exit_config;
    }
    catch (const IoError &e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return exit_io;
    }
    catch (const cfmimo::Error &e)
    {
        std::cerr << "numerical error: " << e.what() << '\n';
        return exit_numerical;
    }
}
