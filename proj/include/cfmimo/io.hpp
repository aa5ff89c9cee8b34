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

// CSV output and K sweeps behind the command-line tool.
//
// All CSV files: comma separated, one header row, '.' decimal point, LF line
// endings, floating-point values with 17 significant digits.
//
//   se_samples.csv   scheme,setup,ue,se
//   se_cdf.csv       scheme,se,cdf
//   fronthaul.csv    scheme,K,mean_scalars
//   complexity.csv   scheme,K,mean_mults

#pragma once

#include "cfmimo/accounting.hpp"
#include "cfmimo/evaluation.hpp"

#include <filesystem>
#include <fstream>
#include <map>

namespace cfmimo
{
    inline std::string csv_double(double v) { return detail::format_double(v); }

    struct SweepRow
    {
        std::string scheme;
        std::size_t num_ues = 0;
        double value = 0.0;
    };

    /// Mean fronthaul scalars per coherence block, averaged over num_setups
    /// fresh setups for every K in the grid. Rows: K-major, then scheme.
    inline std::vector<SweepRow> fronthaul_sweep(const NetworkConfig &base, const std::vector<std::size_t> &k_grid)
    {
        std::vector<SweepRow> rows;
        for (auto K : k_grid)
        {
            NetworkConfig cfg = base;
            cfg.num_ues = K;
            cfg.validate();
            std::vector<double> sum(all_fronthaul_schemes.size(), 0.0);
            for (std::size_t s = 0; s < cfg.num_setups; ++s)
            {
                const auto setup = generate_setup(cfg, s);
                const auto asg = assign(setup.stats, cfg);
                for (std::size_t n = 0; n < all_fronthaul_schemes.size(); ++n)
                    sum[n] += static_cast<double>(fronthaul(all_fronthaul_schemes[n], asg, cfg));
            }
            for (std::size_t n = 0; n < all_fronthaul_schemes.size(); ++n)
                rows.push_back({std::string(fronthaul_scheme_name(all_fronthaul_schemes[n])), K,
                                sum[n] / static_cast<double>(cfg.num_setups)});
        }
        return rows;
    }

    /// Mean per-UE complex multiplications (mean over UEs, then over setups).
    inline std::vector<SweepRow> complexity_sweep(const NetworkConfig &base, const std::vector<std::size_t> &k_grid,
                                                  const std::vector<Scheme> &schemes)
    {
        std::vector<SweepRow> rows;
        for (auto K : k_grid)
        {
            NetworkConfig cfg = base;
            cfg.num_ues = K;
            cfg.validate();
            std::vector<double> sum(schemes.size(), 0.0);
            for (std::size_t s = 0; s < cfg.num_setups; ++s)
            {
                const auto setup = generate_setup(cfg, s);
                const auto asg = assign(setup.stats, cfg);
                for (std::size_t n = 0; n < schemes.size(); ++n)
                    sum[n] += complexity_report(schemes[n], asg, cfg).mean_mults;
            }
            for (std::size_t n = 0; n < schemes.size(); ++n)
                rows.push_back({std::string(scheme_name(schemes[n])), K, sum[n] / static_cast<double>(cfg.num_setups)});
        }
        return rows;
    }

    inline void write_sweep_csv(std::ostream &os, const std::vector<SweepRow> &rows, const std::string &value_column)
    {
        os << "scheme,K," << value_column << '\n';
        for (const auto &r : rows)
            os << r.scheme << ',' << r.num_ues << ',' << csv_double(r.value) << '\n';
    }

    inline void write_se_samples_csv(std::ostream &os, const std::vector<SeResult> &rows)
    {
        os << "scheme,setup,ue,se\n";
        for (const auto &r : rows)
            os << scheme_name(r.scheme) << ',' << r.setup << ',' << r.ue << ',' << csv_double(r.se) << '\n';
    }

    /// Per-scheme CDF of the per-UE SE, pooled over setups; schemes in the
    /// order given.
    inline void write_se_cdf_csv(std::ostream &os, const std::vector<SeResult> &rows, const std::vector<Scheme> &schemes)
    {
        os << "scheme,se,cdf\n";
        for (auto s : schemes)
        {
            std::vector<double> v;
            for (const auto &r : rows)
                if (r.scheme == s)
                    v.push_back(r.se);
            if (v.empty())
                continue;
            for (const auto &[x, F] : cdf(std::move(v)))
                os << scheme_name(s) << ',' << csv_double(x) << ',' << csv_double(F) << '\n';
        }
    }

    /// Minimal reader for the files above: header names and string cells.
    struct CsvTable
    {
        std::vector<std::string> header;
        std::vector<std::vector<std::string>> rows;

        std::size_t column(const std::string &name) const
        {
            for (std::size_t c = 0; c < header.size(); ++c)
                if (header[c] == name)
                    return c;
            throw LookupError("csv: no column '" + name + "'");
        }
    };

    inline CsvTable read_csv(std::istream &in)
    {
        auto split = [](const std::string &line) {
            std::vector<std::string> cells;
            std::string cell;
            std::istringstream ls(line);
            while (std::getline(ls, cell, ','))
                cells.push_back(cell);
            if (!line.empty() && line.back() == ',')
                cells.emplace_back();
            return cells;
        };
        CsvTable t;
        std::string line;
        if (!std::getline(in, line))
            throw IoError("csv: missing header");
        t.header = split(line);
        while (std::getline(in, line))
        {
            if (line.empty())
                continue;
            auto cells = split(line);
            if (cells.size() != t.header.size())
                throw IoError("csv: row has " + std::to_string(cells.size()) + " cells, header has " +
                              std::to_string(t.header.size()));
            t.rows.push_back(std::move(cells));
        }
        return t;
    }

    /// Writes `content` to `path` via a temporary file and rename.
    inline void write_file_atomic(const std::filesystem::path &path, const std::string &content)
    {
        const auto tmp = std::filesystem::path(path.string() + ".tmp");
        {
            std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
            if (!f)
                throw IoError("cannot open " + tmp.string() + " for writing");
            f << content;
            f.flush();
            if (!f)
            {
                std::error_code ec;
                std::filesystem::remove(tmp, ec);
                throw IoError("write to " + tmp.string() + " failed");
            }
        }
        std::error_code ec;
        std::filesystem::rename(tmp, path, ec);
        if (ec)
        {
            std::filesystem::remove(tmp, ec);
            throw IoError("cannot rename " + tmp.string() + " to " + path.string());
        }
    }
}
