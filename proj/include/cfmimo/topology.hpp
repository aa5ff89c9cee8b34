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

#include "cfmimo/config.hpp"
#include "cfmimo/core.hpp"

#include <array>
#include <cmath>
#include <numbers>

namespace cfmimo
{
    struct Point
    {
        double x = 0.0;
        double y = 0.0;
        bool operator==(const Point &) const = default;
    };

    /// The 9 translations that tile the square into a torus.
    inline std::array<Point, 9> wrap_offsets(double side)
    {
        std::array<Point, 9> out{};
        std::size_t n = 0;
        for (int dx = -1; dx <= 1; ++dx)
            for (int dy = -1; dy <= 1; ++dy)
                out[n++] = Point{dx * side, dy * side};
        return out;
    }

    /// Image of `b` (over the 9 wrap offsets) closest to `a`.
    inline Point nearest_image(const Point &a, const Point &b, double side)
    {
        Point best = b;
        double best_d2 = std::numeric_limits<double>::infinity();
        for (const auto &o : wrap_offsets(side))
        {
            const Point c{b.x + o.x, b.y + o.y};
            const double d2 = (c.x - a.x) * (c.x - a.x) + (c.y - a.y) * (c.y - a.y);
            if (d2 < best_d2)
            {
                best_d2 = d2;
                best = c;
            }
        }
        return best;
    }

    /// Toroidal distance: minimum Euclidean distance over the 9 wrapped copies.
    inline double wrap_distance(const Point &a, const Point &b, double side)
    {
        const Point c = nearest_image(a, b, side);
        return std::hypot(c.x - a.x, c.y - a.y);
    }

    /// Spatial correlation of a uniform linear array under Gaussian local
    /// scattering around `nominal_angle` (radians), small-angle closed form:
    ///
    ///   R[m,n] = exp(j 2 pi d (m-n) sin phi) * exp(-s^2/2 (2 pi d (m-n) cos phi)^2)
    ///
    /// with s the angular standard deviation in radians and d the spacing in
    /// wavelengths. The diagonal is 1; the result is Hermitian Toeplitz.
    inline CMat local_scattering_correlation(double nominal_angle, double asd_deg, std::size_t num_antennas,
                                             double antenna_spacing)
    {
        const auto n = static_cast<Eigen::Index>(num_antennas);
        const double asd = asd_deg * std::numbers::pi / 180.0;
        CMat R(n, n);
        for (Eigen::Index m = 0; m < n; ++m)
        {
            for (Eigen::Index c = 0; c < n; ++c)
            {
                const double dist = antenna_spacing * static_cast<double>(m - c);
                const double phase = 2.0 * std::numbers::pi * dist * std::sin(nominal_angle);
                const double spread = 2.0 * std::numbers::pi * dist * std::cos(nominal_angle);
                const double damping = (m == c) ? 1.0 : std::exp(-0.5 * asd * asd * spread * spread);
                R(m, c) = std::polar(damping, phase);
            }
        }
        return R;
    }

    struct Geometry
    {
        std::vector<Point> ap_positions;
        std::vector<Point> ue_positions;
        double side_length = 0.0;

        std::array<Point, 9> offsets() const { return wrap_offsets(side_length); }
        bool operator==(const Geometry &) const = default;
    };

    /// Large-scale statistics: beta[j,k] (linear gain) and R[j,k] with
    /// trace(R[j,k]) = N * beta[j,k].
    struct ChannelStatistics
    {
        std::size_t antennas = 0;
        ApUeTable<double> beta;
        ApUeTable<CMat> R;

        std::size_t num_aps() const { return beta.num_aps(); }
        std::size_t num_ues() const { return beta.num_ues(); }
        bool operator==(const ChannelStatistics &) const = default;
    };

    struct NetworkSetup
    {
        Geometry geometry;
        ChannelStatistics stats;
    };

    /// Large-scale gain in dB before shadowing.
    inline double pathloss_db(const NetworkConfig &config, double planar_distance)
    {
        const double d = std::hypot(planar_distance, config.height_offset_m);
        return config.pathloss_const_db - config.pathloss_exp * 10.0 * std::log10(d);
    }

    /// Builds ChannelStatistics for given positions and per-link shadowing (dB).
    inline ChannelStatistics build_statistics(const NetworkConfig &config, const Geometry &geo,
                                              const ApUeTable<double> &shadow_db)
    {
        const std::size_t L = geo.ap_positions.size();
        const std::size_t K = geo.ue_positions.size();
        ChannelStatistics stats;
        stats.antennas = config.antennas_per_ap;
        stats.beta = ApUeTable<double>(L, K);
        stats.R = ApUeTable<CMat>(L, K);
        for (std::size_t j = 0; j < L; ++j)
        {
            const Point &ap = geo.ap_positions[j];
            for (std::size_t k = 0; k < K; ++k)
            {
                const Point ue = nearest_image(ap, geo.ue_positions[k], geo.side_length);
                const double d = std::hypot(ue.x - ap.x, ue.y - ap.y);
                const double gain_db = pathloss_db(config, d) + shadow_db(j, k);
                const double beta = std::pow(10.0, gain_db / 10.0);
                const double angle = std::atan2(ue.y - ap.y, ue.x - ap.x);
                stats.beta(j, k) = beta;
                stats.R(j, k) = beta * local_scattering_correlation(angle, config.asd_deg, config.antennas_per_ap,
                                                                    config.antenna_spacing_wavelengths);
            }
        }
        return stats;
    }

    /// Random setup for (config.seed, setup_index). APs and UEs are dropped
    /// uniformly on the square. Shadowing is log-normal; for each AP the
    /// shadowing terms of different UEs are jointly Gaussian with covariance
    /// shadow_std^2 * 2^(-d/shadow_decorr), d the wrapped UE-UE distance, and
    /// independent across APs.
    inline NetworkSetup generate_setup(const NetworkConfig &config, std::size_t setup_index)
    {
        config.validate();
        const std::size_t L = config.num_aps;
        const std::size_t K = config.num_ues;

        NetworkSetup out;
        Geometry &geo = out.geometry;
        geo.side_length = config.side_length;
        {
            auto eng = substream(config.seed, Stream::geometry, setup_index);
            std::uniform_real_distribution<double> u(0.0, config.side_length);
            geo.ap_positions.reserve(L);
            for (std::size_t j = 0; j < L; ++j)
            {
                const double x = u(eng);
                geo.ap_positions.push_back(Point{x, u(eng)});
            }
            geo.ue_positions.reserve(K);
            for (std::size_t k = 0; k < K; ++k)
            {
                const double x = u(eng);
                geo.ue_positions.push_back(Point{x, u(eng)});
            }
        }

        ApUeTable<double> shadow(L, K, 0.0);
        if (config.shadow_std_db > 0.0)
        {
            const auto n = static_cast<Eigen::Index>(K);
            RMat cov(n, n);
            for (Eigen::Index a = 0; a < n; ++a)
                for (Eigen::Index b = 0; b < n; ++b)
                {
                    const double d = wrap_distance(geo.ue_positions[a], geo.ue_positions[b], config.side_length);
                    cov(a, b) = config.shadow_std_db * config.shadow_std_db * std::pow(2.0, -d / config.shadow_decorr_m);
                }
            Eigen::SelfAdjointEigenSolver<RMat> es(cov);
            const Eigen::VectorXd s = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
            const RMat factor = es.eigenvectors() * s.asDiagonal();

            auto eng = substream(config.seed, Stream::shadowing, setup_index);
            std::normal_distribution<double> nd(0.0, 1.0);
            Eigen::VectorXd w(n);
            for (std::size_t j = 0; j < L; ++j)
            {
                for (Eigen::Index k = 0; k < n; ++k)
                    w(k) = nd(eng);
                const Eigen::VectorXd z = factor * w;
                for (std::size_t k = 0; k < K; ++k)
                    shadow(j, k) = z(static_cast<Eigen::Index>(k));
            }
        }

        out.stats = build_statistics(config, geo, shadow);
        return out;
    }
}
