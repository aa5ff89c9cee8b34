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

// Master-assisted distributed uplink operation.
//
// Every UE k has a master AP l_k in its serving set A_k; the other serving
// APs (ASAPs) run a local MMSE combiner v_jk and send the master one message
// per UE: the soft data estimate v_jk^H y_j, the fused channel estimates
// v_jk^H h_hat_ji, and the scalar
//
//   mu_jk = v_jk^H (p sum_i C_ji + sigma^2 I) v_jk
//
// The master stacks its own antennas with the ASAP soft estimates into an
// (N + |A_k| - 1)-dimensional observation. Conditioned on the estimates,
// the interference-plus-noise covariance of that observation is B_k and the
// effective channel of UE k is z_k, so the SINR of a combiner v is the
// generalized Rayleigh quotient p |v^H z_k|^2 / (v^H B_k v), maximized by
// v = B_k^{-1} z_k.
//
// In the scalable variant the ASAPs use LP-MMSE, report fused estimates only
// for their served UEs, and restrict the error sum in mu to U_j; the master
// likewise models only the UEs it serves. Unknown fused entries are zero.

#pragma once

#include "cfmimo/combining.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <span>

namespace cfmimo
{
    /// What ASAP j sends to the master of UE k.
    struct AsapMessage
    {
        std::size_t ue = 0;
        std::size_t asap = 0;
        cd soft_estimate{};
        IndexSet fused_ues;        // ascending; all K, or U_j in the scalable variant
        std::vector<cd> fused_csi; // aligned with fused_ues
        double mu = 0.0;

        bool has_fused(std::size_t i) const { return std::binary_search(fused_ues.begin(), fused_ues.end(), i); }

        cd fused(std::size_t i) const
        {
            const auto it = std::lower_bound(fused_ues.begin(), fused_ues.end(), i);
            if (it == fused_ues.end() || *it != i)
                throw LookupError("fused CSI of UE " + std::to_string(i) + " not present in message from AP " +
                                  std::to_string(asap));
            return fused_csi[static_cast<std::size_t>(it - fused_ues.begin())];
        }

        bool operator==(const AsapMessage &) const = default;
    };

    /// Builds the message of ASAP j for UE k from an already computed combiner.
    inline AsapMessage make_asap_message(const ChannelEstimates &est, const ServingAssignment &asg,
                                         const NetworkConfig &config, std::size_t j, std::size_t k, const CVec &v,
                                         EstimationScope scope, cd soft_estimate)
    {
        if (j == asg.master_of[k])
            throw DomainError("asap_message: AP " + std::to_string(j) + " is the master of UE " + std::to_string(k));
        if (!asg.serves(j, k))
            throw LookupError("asap_message: UE " + std::to_string(k) + " is not served by AP " + std::to_string(j));

        AsapMessage m;
        m.ue = k;
        m.asap = j;
        m.soft_estimate = soft_estimate;
        if (scope == EstimationScope::all_ues)
        {
            m.fused_ues.resize(asg.num_ues);
            for (std::size_t i = 0; i < asg.num_ues; ++i)
                m.fused_ues[i] = i;
        }
        else
        {
            m.fused_ues = asg.served_ues[j];
        }
        m.fused_csi.reserve(m.fused_ues.size());
        for (auto i : m.fused_ues)
            m.fused_csi.push_back(v.dot(est.h_hat(j, i)));

        const auto &es = est.statistics();
        const CMat &error_sum = scope == EstimationScope::all_ues ? es.error_sum_all[j] : es.error_sum_served[j];
        m.mu = config.ue_power * v.dot(error_sum * v).real() + config.noise_power * v.squaredNorm();
        return m;
    }

    /// ASAP j's message for UE k: L-MMSE with all-UE fused CSI and mu, or
    /// LP-MMSE with served-UE fused CSI and mu' (scalable). The soft estimate
    /// is computed from `y_j` when given, zero otherwise.
    inline AsapMessage asap_message(const ChannelEstimates &est, const ServingAssignment &asg,
                                    const NetworkConfig &config, std::size_t j, std::size_t k, EstimationScope scope,
                                    const CVec *y_j = nullptr)
    {
        if (j == asg.master_of[k])
            throw DomainError("asap_message: AP " + std::to_string(j) + " is the master of UE " + std::to_string(k));
        const CVec v = scope == EstimationScope::all_ues ? l_mmse(est, asg, config, j, k)
                                                         : lp_mmse(est, asg, config, j, k);
        const cd soft = y_j ? soft_local_estimate(asg, j, k, v, *y_j) : cd{};
        return make_asap_message(est, asg, config, j, k, v, scope, soft);
    }

    /// The master's combining problem for UE k.
    struct MapProblem
    {
        std::size_t ue = 0;
        std::size_t master = 0;
        IndexSet asaps;       // row order of G, g_kk, F and a
        IndexSet interferers; // column order of H_master and G: all i != k
        CVec z;               // [h_hat_lk; g_kk]
        CMat B;
        CMat H_master;        // N x (K-1), zero columns outside the master's scope
        CMat G;               // (|A_k|-1) x (K-1)
        Eigen::VectorXd F;    // mu of each ASAP

        Eigen::Index dimension() const { return z.size(); }
        Eigen::Index antennas() const { return H_master.rows(); }
    };

    /// Assembles z_k and
    ///
    ///   B_k = [ p (H H^H + sum_i C_li) + s2 I      p H G^H       ]
    ///         [ p G H^H                            p G G^H + F   ]
    ///
    /// with H the master's estimates of the interferers and G the ASAP fused
    /// estimates. `messages` may come in any order; one per ASAP is required.
    inline MapProblem build_map_problem(const ChannelEstimates &master_est, std::vector<AsapMessage> messages,
                                        const ServingAssignment &asg, const NetworkConfig &config, std::size_t k,
                                        EstimationScope scope)
    {
        const double p = config.ue_power;
        MapProblem P;
        P.ue = k;
        P.master = asg.master_of[k];
        P.asaps = asg.asaps(k);
        const std::size_t l = P.master;
        const std::size_t K = asg.num_ues;
        const auto N = static_cast<Eigen::Index>(master_est.antennas());
        const auto R = static_cast<Eigen::Index>(P.asaps.size());

        std::sort(messages.begin(), messages.end(),
                  [](const AsapMessage &a, const AsapMessage &b) { return a.asap < b.asap; });
        if (messages.size() != P.asaps.size())
            throw ProtocolError("build_map_problem: expected " + std::to_string(P.asaps.size()) +
                                " ASAP messages for UE " + std::to_string(k) + ", got " +
                                std::to_string(messages.size()));
        for (std::size_t r = 0; r < P.asaps.size(); ++r)
        {
            if (messages[r].asap != P.asaps[r])
                throw ProtocolError("build_map_problem: missing message from ASAP " + std::to_string(P.asaps[r]));
            if (messages[r].ue != k)
                throw ProtocolError("build_map_problem: message addressed to UE " + std::to_string(messages[r].ue));
        }

        for (std::size_t i = 0; i < K; ++i)
            if (i != k)
                P.interferers.push_back(i);
        const auto I = static_cast<Eigen::Index>(P.interferers.size());

        P.H_master = CMat::Zero(N, I);
        for (Eigen::Index c = 0; c < I; ++c)
        {
            const std::size_t i = P.interferers[static_cast<std::size_t>(c)];
            if (scope == EstimationScope::all_ues || asg.serves(l, i))
                P.H_master.col(c) = master_est.h_hat(l, i);
        }

        P.G = CMat::Zero(R, I);
        P.F.resize(R);
        CVec g_kk(R);
        for (Eigen::Index r = 0; r < R; ++r)
        {
            const AsapMessage &m = messages[static_cast<std::size_t>(r)];
            if (m.mu < 0.0 || !std::isfinite(m.mu))
                throw ProtocolError("build_map_problem: invalid mu in message from AP " + std::to_string(m.asap));
            g_kk(r) = m.fused(k);
            for (Eigen::Index c = 0; c < I; ++c)
            {
                const std::size_t i = P.interferers[static_cast<std::size_t>(c)];
                if (m.has_fused(i))
                    P.G(r, c) = m.fused(i);
                else if (scope == EstimationScope::all_ues)
                    throw ProtocolError("build_map_problem: message from AP " + std::to_string(m.asap) +
                                        " lacks fused CSI of UE " + std::to_string(i));
            }
            P.F(r) = m.mu;
        }

        P.z.resize(N + R);
        P.z.head(N) = master_est.h_hat(l, k);
        P.z.tail(R) = g_kk;

        const auto &es = master_est.statistics();
        const CMat &error_sum = scope == EstimationScope::all_ues ? es.error_sum_all[l] : es.error_sum_served[l];
        P.B.resize(N + R, N + R);
        P.B.topLeftCorner(N, N) = p * (P.H_master * P.H_master.adjoint() + error_sum);
        P.B.topLeftCorner(N, N).diagonal().array() += config.noise_power;
        P.B.topRightCorner(N, R) = p * P.H_master * P.G.adjoint();
        P.B.bottomLeftCorner(R, N) = P.B.topRightCorner(N, R).adjoint();
        P.B.bottomRightCorner(R, R) = p * P.G * P.G.adjoint();
        P.B.bottomRightCorner(R, R).diagonal() += P.F.cast<cd>();
        return P;
    }

    struct MaduoCombiner
    {
        CVec v;       // stacked [v_local; a]
        CVec v_local; // acts on the master's antennas
        CVec a;       // acts on the ASAP soft estimates, canonical ASAP order
    };

    /// v_k = B_k^{-1} z_k.
    inline MaduoCombiner map_combiner(const MapProblem &P)
    {
        MaduoCombiner c;
        c.v = hermitian_solve(P.B, P.z, "master combining matrix B");
        c.v_local = c.v.head(P.antennas());
        c.a = c.v.tail(P.dimension() - P.antennas());
        return c;
    }

    /// p |v^H z|^2 / (v^H B v).
    inline double maduo_sinr(const MapProblem &P, const CVec &v, const NetworkConfig &config)
    {
        if (v.size() != P.dimension())
            throw DomainError("maduo_sinr: combiner dimension mismatch");
        if (v.squaredNorm() == 0.0)
            throw DomainError("maduo_sinr: zero combiner");
        return config.ue_power * std::norm(v.dot(P.z)) / v.dot(P.B * v).real();
    }

    /// SINR of the master alone (a = 0) with its own MMSE combiner.
    inline double master_only_sinr(const MapProblem &P, const NetworkConfig &config)
    {
        const auto N = P.antennas();
        const CMat Btl = P.B.topLeftCorner(N, N);
        const CVec h = P.z.head(N);
        const CVec v = hermitian_solve(Btl, h, "master-only combining");
        return config.ue_power * h.dot(v).real();
    }

    /// s_hat_k = v_local^H y_l + sum_r conj(a_r) s_hat_r, messages in any order.
    inline cd final_estimate(const MaduoCombiner &c, const CVec &y_l, std::vector<AsapMessage> messages)
    {
        if (y_l.size() != c.v_local.size() || static_cast<Eigen::Index>(messages.size()) != c.a.size())
            throw DomainError("final_estimate: dimension mismatch");
        std::sort(messages.begin(), messages.end(),
                  [](const AsapMessage &a, const AsapMessage &b) { return a.asap < b.asap; });
        cd s = c.v_local.dot(y_l);
        for (Eigen::Index r = 0; r < c.a.size(); ++r)
            s += std::conj(c.a(r)) * messages[static_cast<std::size_t>(r)].soft_estimate;
        return s;
    }

    // ----- Wire layout -------------------------------------------------------
    //
    //   [k: u32][j: u32][soft: 2 x f64][fused: Omega x (2 x f64)][mu: f64]
    //
    // little-endian; fused entries in ascending UE order of the sender's scope.

    namespace detail
    {
        inline void put_u32(std::vector<std::uint8_t> &out, std::uint32_t v)
        {
            for (int b = 0; b < 4; ++b)
                out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
        }
        inline void put_f64(std::vector<std::uint8_t> &out, double d)
        {
            const auto v = std::bit_cast<std::uint64_t>(d);
            for (int b = 0; b < 8; ++b)
                out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
        }
        inline std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t at)
        {
            std::uint32_t v = 0;
            for (int b = 0; b < 4; ++b)
                v |= static_cast<std::uint32_t>(in[at + b]) << (8 * b);
            return v;
        }
        inline double get_f64(std::span<const std::uint8_t> in, std::size_t at)
        {
            std::uint64_t v = 0;
            for (int b = 0; b < 8; ++b)
                v |= static_cast<std::uint64_t>(in[at + b]) << (8 * b);
            return std::bit_cast<double>(v);
        }
    }

    inline constexpr std::size_t message_header_bytes = 8;

    inline std::vector<std::uint8_t> serialize(const AsapMessage &m)
    {
        std::vector<std::uint8_t> out;
        out.reserve(message_header_bytes + 16 * (m.fused_csi.size() + 1) + 8);
        detail::put_u32(out, static_cast<std::uint32_t>(m.ue));
        detail::put_u32(out, static_cast<std::uint32_t>(m.asap));
        detail::put_f64(out, m.soft_estimate.real());
        detail::put_f64(out, m.soft_estimate.imag());
        for (const cd &g : m.fused_csi)
        {
            detail::put_f64(out, g.real());
            detail::put_f64(out, g.imag());
        }
        detail::put_f64(out, m.mu);
        return out;
    }

    /// Number of fused entries encoded in a serialized message.
    inline std::size_t wire_fused_count(std::span<const std::uint8_t> bytes)
    {
        const std::size_t fixed = message_header_bytes + 16 + 8;
        if (bytes.size() < fixed || (bytes.size() - fixed) % 16 != 0)
            throw ProtocolError("malformed ASAP message: " + std::to_string(bytes.size()) + " bytes");
        return (bytes.size() - fixed) / 16;
    }

    /// Scalars carried by one serialized message: one soft estimate, Omega
    /// fused estimates and mu.
    inline std::size_t wire_scalar_count(std::span<const std::uint8_t> bytes) { return wire_fused_count(bytes) + 2; }

    /// Inverse of serialize; `fused_ues` names the sender's scope.
    inline AsapMessage deserialize(std::span<const std::uint8_t> bytes, const IndexSet &fused_ues)
    {
        const std::size_t omega = wire_fused_count(bytes);
        if (omega != fused_ues.size())
            throw ProtocolError("ASAP message carries " + std::to_string(omega) + " fused entries, expected " +
                                std::to_string(fused_ues.size()));
        AsapMessage m;
        m.ue = detail::get_u32(bytes, 0);
        m.asap = detail::get_u32(bytes, 4);
        std::size_t at = message_header_bytes;
        m.soft_estimate = cd(detail::get_f64(bytes, at), detail::get_f64(bytes, at + 8));
        at += 16;
        m.fused_ues = fused_ues;
        m.fused_csi.reserve(omega);
        for (std::size_t n = 0; n < omega; ++n, at += 16)
            m.fused_csi.emplace_back(detail::get_f64(bytes, at), detail::get_f64(bytes, at + 8));
        m.mu = detail::get_f64(bytes, at);
        return m;
    }
}
