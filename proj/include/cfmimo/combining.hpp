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

#include "cfmimo/assignment.hpp"
#include "cfmimo/channel.hpp"
#include "cfmimo/config.hpp"

namespace cfmimo
{
    // ----- Centralized combining ---------------------------------------------

    /// Nonzero part of D_k v_k: one N-block per serving AP, in ascending AP order.
    struct CentralizedCombiner
    {
        IndexSet aps;
        CVec v;
    };

    /// Estimate of UE i stacked over the antenna blocks of `aps`.
    inline CVec stacked_estimate(const ChannelEstimates &est, const IndexSet &aps, std::size_t i)
    {
        const auto N = static_cast<Eigen::Index>(est.antennas());
        CVec out(N * static_cast<Eigen::Index>(aps.size()));
        for (std::size_t b = 0; b < aps.size(); ++b)
            out.segment(static_cast<Eigen::Index>(b) * N, N) = est.h_hat(aps[b], i);
        return out;
    }

    /// Block-diagonal sum over `ues` of C[j,i] for j in `aps`.
    inline CMat stacked_error_sum(const ChannelEstimates &est, const IndexSet &aps, const IndexSet &ues)
    {
        const auto N = static_cast<Eigen::Index>(est.antennas());
        const auto M = N * static_cast<Eigen::Index>(aps.size());
        CMat out = CMat::Zero(M, M);
        for (std::size_t b = 0; b < aps.size(); ++b)
        {
            auto blk = out.block(static_cast<Eigen::Index>(b) * N, static_cast<Eigen::Index>(b) * N, N, N);
            for (auto i : ues)
                blk += est.C(aps[b], i);
        }
        return out;
    }

    /// v = p (sum_{i in ues} p (h_i h_i^H + C_i) + sigma^2 I)^{-1} h_k over the
    /// serving antennas of k.
    inline CentralizedCombiner centralized_mmse(const ChannelEstimates &est, const ServingAssignment &asg,
                                                const NetworkConfig &config, std::size_t k, const IndexSet &ues)
    {
        const double p = config.ue_power;
        CentralizedCombiner out;
        out.aps = asg.serving_aps[k];
        const auto N = static_cast<Eigen::Index>(est.antennas());
        const auto M = N * static_cast<Eigen::Index>(out.aps.size());

        CMat H(M, static_cast<Eigen::Index>(ues.size()));
        for (std::size_t c = 0; c < ues.size(); ++c)
            H.col(static_cast<Eigen::Index>(c)) = stacked_estimate(est, out.aps, ues[c]);
        CMat A = p * (H * H.adjoint()) + p * stacked_error_sum(est, out.aps, ues);
        A.diagonal().array() += config.noise_power;
        out.v = p * hermitian_solve(A, stacked_estimate(est, out.aps, k), "centralized MMSE");
        return out;
    }

    /// P-MMSE: interference model over the partner set S_k.
    inline CentralizedCombiner p_mmse(const ChannelEstimates &est, const ServingAssignment &asg,
                                      const NetworkConfig &config, std::size_t k)
    {
        return centralized_mmse(est, asg, config, k, asg.partners[k]);
    }

    /// C-MMSE: interference model over all K UEs, restricted to the serving APs of k.
    inline CentralizedCombiner c_mmse(const ChannelEstimates &est, const ServingAssignment &asg,
                                      const NetworkConfig &config, std::size_t k)
    {
        IndexSet all(asg.num_ues);
        for (std::size_t i = 0; i < all.size(); ++i)
            all[i] = i;
        return centralized_mmse(est, asg, config, k, all);
    }

    // ----- Local combining at one AP -----------------------------------------

    /// v = p (sum_{i in ues} p (h_ji h_ji^H + C_ji) + sigma^2 I_N)^{-1} h_jk.
    /// `error_sum` must equal the sum of C[j,i] over `ues`.
    inline CVec local_mmse(const ChannelEstimates &est, const NetworkConfig &config, std::size_t j, std::size_t k,
                           const IndexSet &ues, const CMat &error_sum)
    {
        const double p = config.ue_power;
        const auto N = static_cast<Eigen::Index>(est.antennas());
        CMat H(N, static_cast<Eigen::Index>(ues.size()));
        for (std::size_t c = 0; c < ues.size(); ++c)
            H.col(static_cast<Eigen::Index>(c)) = est.h_hat(j, ues[c]);
        CMat A = p * (H * H.adjoint()) + p * error_sum;
        A.diagonal().array() += config.noise_power;
        return p * hermitian_solve(A, est.h_hat(j, k), "local MMSE");
    }

    /// L-MMSE at AP j for a served UE k, using estimates of all K UEs.
    inline CVec l_mmse(const ChannelEstimates &est, const ServingAssignment &asg, const NetworkConfig &config,
                       std::size_t j, std::size_t k)
    {
        if (!asg.serves(j, k))
            throw LookupError("l_mmse: UE " + std::to_string(k) + " is not served by AP " + std::to_string(j));
        IndexSet all(asg.num_ues);
        for (std::size_t i = 0; i < all.size(); ++i)
            all[i] = i;
        return local_mmse(est, config, j, k, all, est.statistics().error_sum_all[j]);
    }

    /// LP-MMSE at AP j for a served UE k, using only estimates of U_j.
    inline CVec lp_mmse(const ChannelEstimates &est, const ServingAssignment &asg, const NetworkConfig &config,
                        std::size_t j, std::size_t k)
    {
        if (!asg.serves(j, k))
            throw LookupError("lp_mmse: UE " + std::to_string(k) + " is not served by AP " + std::to_string(j));
        return local_mmse(est, config, j, k, asg.served_ues[j], est.statistics().error_sum_served[j]);
    }

    /// s_hat[j,k] = v^H y_j; only defined for served pairs.
    inline cd soft_local_estimate(const ServingAssignment &asg, std::size_t j, std::size_t k, const CVec &v,
                                  const CVec &y_j)
    {
        if (!asg.serves(j, k))
            throw LookupError("soft_local_estimate: UE " + std::to_string(k) + " is not served by AP " +
                              std::to_string(j));
        return v.dot(y_j);
    }

    // ----- Large-scale fading decoding ---------------------------------------

    enum class LsfdMode
    {
        optimal,        // interference model over all K UEs
        nearly_optimal, // interference model over the partner set S_k
    };

    /// Monte Carlo moments of the effective gains g_ki[j] = v_jk^H h_ji over
    /// the serving APs of one UE k.
    struct LsfdMoments
    {
        IndexSet aps;
        std::size_t samples = 0;
        CVec mean_gain;              // E{g_kk}
        CMat second_moment_all;      // sum over all i of E{g_ki g_ki^H}
        CMat second_moment_partners; // sum over i in S_k of E{g_ki g_ki^H}
        Eigen::VectorXd combiner_power; // E{||v_jk||^2}
    };

    /// Running sums for LsfdMoments. Contributions must be added in a fixed
    /// order for bitwise reproducibility.
    class LsfdAccumulator
    {
    public:
        LsfdAccumulator() = default;
        explicit LsfdAccumulator(IndexSet aps) : aps_(std::move(aps))
        {
            const auto n = static_cast<Eigen::Index>(aps_.size());
            sum_gain_ = CVec::Zero(n);
            sum_all_ = CMat::Zero(n, n);
            sum_partners_ = CMat::Zero(n, n);
            sum_power_ = Eigen::VectorXd::Zero(n);
        }

        /// `gains` is |A_k| x K with gains(r, i) = v_{A_k[r],k}^H h_{A_k[r],i};
        /// `powers` holds ||v_{A_k[r],k}||^2.
        void add(const CMat &gains, const Eigen::VectorXd &powers, std::size_t k, const IndexSet &partners)
        {
            sum_gain_ += gains.col(static_cast<Eigen::Index>(k));
            sum_all_ += gains * gains.adjoint();
            for (auto i : partners)
            {
                const auto g = gains.col(static_cast<Eigen::Index>(i));
                sum_partners_ += g * g.adjoint();
            }
            sum_power_ += powers;
            ++count_;
        }

        LsfdMoments moments() const
        {
            LsfdMoments m;
            m.aps = aps_;
            m.samples = count_;
            const double inv = count_ ? 1.0 / static_cast<double>(count_) : 0.0;
            m.mean_gain = sum_gain_ * inv;
            m.second_moment_all = sum_all_ * inv;
            m.second_moment_partners = sum_partners_ * inv;
            m.combiner_power = sum_power_ * inv;
            return m;
        }

    private:
        IndexSet aps_;
        std::size_t count_ = 0;
        CVec sum_gain_;
        CMat sum_all_;
        CMat sum_partners_;
        Eigen::VectorXd sum_power_;
    };

    struct LsfdWeights
    {
        IndexSet aps;
        CVec a;
    };

    /// sum_i p M_ki - p m_k m_k^H + sigma^2 Lambda_k over the requested UE set.
    inline CMat lsfd_interference(const LsfdMoments &m, const NetworkConfig &config, LsfdMode mode)
    {
        const double p = config.ue_power;
        const CMat &second = mode == LsfdMode::optimal ? m.second_moment_all : m.second_moment_partners;
        CMat Q = p * second - p * m.mean_gain * m.mean_gain.adjoint();
        Q.diagonal() += (config.noise_power * m.combiner_power).cast<cd>();
        return 0.5 * (Q + Q.adjoint());
    }

    /// a_k = (sum_i p M_ki - p m_k m_k^H + sigma^2 Lambda_k)^{-1} m_k.
    inline LsfdWeights lsfd_weights(const LsfdMoments &m, const NetworkConfig &config, LsfdMode mode)
    {
        if (m.samples < 2)
            throw StatisticsError("lsfd_weights: at least 2 Monte Carlo samples are required");
        LsfdWeights w;
        w.aps = m.aps;
        w.a = hermitian_solve(lsfd_interference(m, config, mode), m.mean_gain, "LSFD");
        return w;
    }

    /// Moment-based SINR p |a^H m|^2 / (a^H Q a) with Q the all-UE interference.
    inline double lsfd_sinr(const CVec &a, const LsfdMoments &m, const NetworkConfig &config)
    {
        if (a.squaredNorm() == 0.0)
            throw DomainError("lsfd_sinr: zero weight vector");
        const CMat Q = lsfd_interference(m, config, LsfdMode::optimal);
        const double den = a.dot(Q * a).real();
        if (!(den > 0.0))
            throw StatisticsError("lsfd_sinr: degenerate moment matrices");
        return config.ue_power * std::norm(a.dot(m.mean_gain)) / den;
    }
}
