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

#pragma once

#include "cfmimo/core.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

namespace cfmimo
{
    inline double dbm_to_watt(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }

    /// Scalar parameters of one simulated network. Defaults reproduce the
    /// reference scenario: 100 four-antenna APs on a 2 km x 2 km torus,
    /// 200-sample coherence blocks with 10 pilots, 100 mW UEs.
    struct NetworkConfig
    {
        std::size_t num_aps = 100;        // L
        std::size_t antennas_per_ap = 4;  // N
        std::size_t num_ues = 40;         // K
        double side_length = 2000.0;      // meters
        std::size_t tau_c = 200;
        std::size_t tau_p = 10;
        double ue_power = 0.1;            // Watts, equal for all UEs
        double noise_power = dbm_to_watt(-94.0);

        double pathloss_const_db = -30.5;
        double pathloss_exp = 3.67;
        double shadow_std_db = 4.0;
        double shadow_decorr_m = 9.0;
        double height_offset_m = 10.0;
        double asd_deg = 15.0;
        double antenna_spacing_wavelengths = 0.5;

        std::size_t num_setups = 50;
        std::size_t num_realizations = 100;
        std::uint64_t seed = 1;

        std::size_t tau_u() const { return tau_c - tau_p; }

        /// Throws ConfigError naming the first violated constraint.
        void validate() const
        {
            auto fail = [](const std::string &msg) { throw ConfigError(msg); };
            if (num_aps == 0)
                fail("num_aps must be positive");
            if (antennas_per_ap == 0)
                fail("antennas_per_ap must be positive");
            if (num_ues == 0)
                fail("num_ues must be positive");
            if (tau_p == 0)
                fail("tau_p must be at least 1");
            if (tau_c <= tau_p)
                fail("tau_c must exceed tau_p (tau_u = tau_c - tau_p > 0)");
            if (num_aps * antennas_per_ap <= num_ues)
                fail("num_aps * antennas_per_ap must exceed num_ues");
            if (!(ue_power > 0.0) || !std::isfinite(ue_power))
                fail("ue_power must be positive");
            if (!(noise_power > 0.0) || !std::isfinite(noise_power))
                fail("noise_power must be positive");
            if (!(side_length > 0.0) || !std::isfinite(side_length))
                fail("side_length must be positive");
            if (shadow_std_db < 0.0)
                fail("shadow_std_db must be non-negative");
            if (!(shadow_decorr_m > 0.0))
                fail("shadow_decorr_m must be positive");
            if (height_offset_m < 0.0)
                fail("height_offset_m must be non-negative");
            if (!(asd_deg >= 0.0))
                fail("asd_deg must be non-negative");
            if (!(antenna_spacing_wavelengths > 0.0))
                fail("antenna_spacing_wavelengths must be positive");
            if (num_setups == 0)
                fail("num_setups must be positive");
            if (num_realizations == 0)
                fail("num_realizations must be positive");
        }

        bool operator==(const NetworkConfig &) const = default;
    };

    // ----- Flat key = value configuration files ------------------------------
    //
    //   # comment
    //   num_aps = 100
    //   noise_power = 3.9810717055349565e-13
    //
    // Unknown keys and malformed values are ConfigErrors carrying the line number.

    namespace detail
    {
        inline std::string trim(const std::string &s)
        {
            const auto b = s.find_first_not_of(" \t\r");
            if (b == std::string::npos)
                return {};
            const auto e = s.find_last_not_of(" \t\r");
            return s.substr(b, e - b + 1);
        }

        template <typename T>
        T parse_number(const std::string &text, const std::string &where)
        {
            std::istringstream is(text);
            is.imbue(std::locale::classic());
            T value{};
            if constexpr (std::is_unsigned_v<T>)
            {
                if (!text.empty() && text.front() == '-')
                    throw ConfigError(where + ": expected a non-negative integer, got '" + text + "'");
            }
            is >> value;
            if (is.fail() || !is.eof())
                throw ConfigError(where + ": cannot parse value '" + text + "'");
            return value;
        }

        inline std::string format_double(double v)
        {
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.17g", v);
            return buf;
        }
    }

    /// Applies one key/value pair. `where` prefixes error messages.
    inline void set_config_value(NetworkConfig &c, const std::string &key, const std::string &value,
                                 const std::string &where = "config")
    {
        using detail::parse_number;
        const std::string at = where + ": " + key;
        if (key == "num_aps") c.num_aps = parse_number<std::size_t>(value, at);
        else if (key == "antennas_per_ap") c.antennas_per_ap = parse_number<std::size_t>(value, at);
        else if (key == "num_ues") c.num_ues = parse_number<std::size_t>(value, at);
        else if (key == "side_length") c.side_length = parse_number<double>(value, at);
        else if (key == "tau_c") c.tau_c = parse_number<std::size_t>(value, at);
        else if (key == "tau_p") c.tau_p = parse_number<std::size_t>(value, at);
        else if (key == "ue_power") c.ue_power = parse_number<double>(value, at);
        else if (key == "noise_power") c.noise_power = parse_number<double>(value, at);
        else if (key == "noise_power_dbm") c.noise_power = dbm_to_watt(parse_number<double>(value, at));
        else if (key == "pathloss_const_db") c.pathloss_const_db = parse_number<double>(value, at);
        else if (key == "pathloss_exp") c.pathloss_exp = parse_number<double>(value, at);
        else if (key == "shadow_std_db") c.shadow_std_db = parse_number<double>(value, at);
        else if (key == "shadow_decorr_m") c.shadow_decorr_m = parse_number<double>(value, at);
        else if (key == "height_offset_m") c.height_offset_m = parse_number<double>(value, at);
        else if (key == "asd_deg") c.asd_deg = parse_number<double>(value, at);
        else if (key == "antenna_spacing_wavelengths") c.antenna_spacing_wavelengths = parse_number<double>(value, at);
        else if (key == "num_setups") c.num_setups = parse_number<std::size_t>(value, at);
        else if (key == "num_realizations") c.num_realizations = parse_number<std::size_t>(value, at);
        else if (key == "seed") c.seed = parse_number<std::uint64_t>(value, at);
        else throw ConfigError(where + ": unknown key '" + key + "'");
    }

    /// Parses the key = value text. Keys may appear in any order; missing keys keep defaults.
    inline NetworkConfig parse_config(std::istream &in, const std::string &source = "config",
                                      NetworkConfig base = {})
    {
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line))
        {
            ++line_no;
            const auto hash = line.find('#');
            if (hash != std::string::npos)
                line.erase(hash);
            line = detail::trim(line);
            if (line.empty())
                continue;
            const std::string where = source + ":" + std::to_string(line_no);
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError(where + ": expected 'key = value'");
            const auto key = detail::trim(line.substr(0, eq));
            const auto value = detail::trim(line.substr(eq + 1));
            if (key.empty() || value.empty())
                throw ConfigError(where + ": expected 'key = value'");
            set_config_value(base, key, value, where);
        }
        return base;
    }

    inline NetworkConfig load_config(const std::string &path, NetworkConfig base = {})
    {
        std::ifstream f(path);
        if (!f)
            throw ConfigError(path + ": cannot open configuration file");
        return parse_config(f, path, base);
    }

    /// Emits every field; parse_config(write_config(c)) == c bit for bit.
    inline std::string write_config(const NetworkConfig &c)
    {
        using detail::format_double;
        std::ostringstream os;
        os << "num_aps = " << c.num_aps << '\n'
           << "antennas_per_ap = " << c.antennas_per_ap << '\n'
           << "num_ues = " << c.num_ues << '\n'
           << "side_length = " << format_double(c.side_length) << '\n'
           << "tau_c = " << c.tau_c << '\n'
           << "tau_p = " << c.tau_p << '\n'
           << "ue_power = " << format_double(c.ue_power) << '\n'
           << "noise_power = " << format_double(c.noise_power) << '\n'
           << "pathloss_const_db = " << format_double(c.pathloss_const_db) << '\n'
           << "pathloss_exp = " << format_double(c.pathloss_exp) << '\n'
           << "shadow_std_db = " << format_double(c.shadow_std_db) << '\n'
           << "shadow_decorr_m = " << format_double(c.shadow_decorr_m) << '\n'
           << "height_offset_m = " << format_double(c.height_offset_m) << '\n'
           << "asd_deg = " << format_double(c.asd_deg) << '\n'
           << "antenna_spacing_wavelengths = " << format_double(c.antenna_spacing_wavelengths) << '\n'
           << "num_setups = " << c.num_setups << '\n'
           << "num_realizations = " << c.num_realizations << '\n'
           << "seed = " << c.seed << '\n';
        return os.str();
    }
}
