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
#include "cfmimo/config.hpp"
#include "cfmimo/topology.hpp"

#include <memory>

namespace cfmimo
{
    /// Which channels an AP estimates: every UE in the network, or only the
    /// UEs it serves.
    enum class EstimationScope
    {
        all_ues,
        served_only,
    };

    // ----- Per-setup estimator statistics ------------------------------------

    /// Everything about MMSE estimation that depends only on large-scale
    /// statistics: the pilot covariances Psi[j,t] (factored), the error
    /// covariances C[j,k], and the linear estimators W[j,k] with
    /// h_hat[j,k] = W[j,k] * y_pilot[j, t_k].
    struct EstimationStatistics
    {
        std::size_t antennas = 0;
        ApUeTable<CMat> psi;                  // L x tau_p
        ApUeTable<Eigen::LLT<CMat>> psi_llt;  // L x tau_p
        ApUeTable<CMat> error_cov;            // L x K, C[j,k]
        ApUeTable<CMat> estimator;            // L x K, W[j,k]
        std::vector<CMat> error_sum_all;      // per AP: sum over all UEs of C[j,i]
        std::vector<CMat> error_sum_served;   // per AP: sum over U_j of C[j,i]

        const CMat &C(std::size_t j, std::size_t k) const { return error_cov(j, k); }
    };

    inline EstimationStatistics estimation_statistics(const ChannelStatistics &stats, const ServingAssignment &asg,
                                                      const NetworkConfig &config)
    {
        const std::size_t L = stats.num_aps(), K = stats.num_ues(), T = asg.num_pilots;
        const auto N = static_cast<Eigen::Index>(stats.antennas);
        const double pilot_gain = config.ue_power * static_cast<double>(config.tau_p);

        EstimationStatistics es;
        es.antennas = stats.antennas;
        es.psi = ApUeTable<CMat>(L, T);
        es.psi_llt = ApUeTable<Eigen::LLT<CMat>>(L, T);
        es.error_cov = ApUeTable<CMat>(L, K);
        es.estimator = ApUeTable<CMat>(L, K);
        es.error_sum_all.assign(L, CMat::Zero(N, N));
        es.error_sum_served.assign(L, CMat::Zero(N, N));

        for (std::size_t j = 0; j < L; ++j)
        {
            for (std::size_t t = 0; t < T; ++t)
            {
                CMat psi = config.noise_power * CMat::Identity(N, N);
                for (auto i : asg.copilot_sets[t])
                    psi += pilot_gain * stats.R(j, i);
                es.psi_llt(j, t).compute(psi);
                if (es.psi_llt(j, t).info() != Eigen::Success)
                    throw NumericalError("pilot covariance Psi is not positive definite");
                es.psi(j, t) = std::move(psi);
            }
            for (std::size_t k = 0; k < K; ++k)
            {
                const CMat &R = stats.R(j, k);
                // Psi^{-1} R; R Psi^{-1} is its adjoint since both are Hermitian.
                const CMat psi_inv_R = es.psi_llt(j, asg.pilot_of[k]).solve(R);
                es.estimator(j, k) = std::sqrt(pilot_gain) * psi_inv_R.adjoint();
                CMat C = R - pilot_gain * R * psi_inv_R;
                C = 0.5 * (C + C.adjoint()).eval();
                es.error_sum_all[j] += C;
                if (asg.serves(j, k))
                    es.error_sum_served[j] += C;
                es.error_cov(j, k) = std::move(C);
            }
        }
        return es;
    }

    // ----- Per-realization state ---------------------------------------------

    /// One coherence block: true channels, stored pilot noise, despread pilots.
    struct ChannelState
    {
        ApUeTable<CVec> h;           // L x K
        ApUeTable<CVec> pilot_noise; // L x tau_p
        ApUeTable<CVec> y_pilot;     // L x tau_p
    };

    /// Square roots of the correlation matrices, reused across realizations.
    inline ApUeTable<CMat> correlation_factors(const ChannelStatistics &stats)
    {
        ApUeTable<CMat> f(stats.num_aps(), stats.num_ues());
        for (std::size_t j = 0; j < stats.num_aps(); ++j)
            for (std::size_t k = 0; k < stats.num_ues(); ++k)
                f(j, k) = psd_sqrt(stats.R(j, k));
        return f;
    }

    /// h[j,k] = R[j,k]^{1/2} w, w ~ CN(0, I), deterministic in (seed, setup, realization).
    inline ApUeTable<CVec> draw_channels(const ApUeTable<CMat> &factors, std::uint64_t seed, std::size_t setup_index,
                                         std::size_t realization_index)
    {
        auto eng = substream(seed, Stream::channel, setup_index, realization_index);
        ApUeTable<CVec> h(factors.num_aps(), factors.num_ues());
        for (std::size_t j = 0; j < factors.num_aps(); ++j)
            for (std::size_t k = 0; k < factors.num_ues(); ++k)
                h(j, k) = factors(j, k) * complex_normal_vector(eng, factors(j, k).rows());
        return h;
    }

    inline ApUeTable<CVec> draw_channels(const ChannelStatistics &stats, std::uint64_t seed, std::size_t setup_index,
                                         std::size_t realization_index)
    {
        return draw_channels(correlation_factors(stats), seed, setup_index, realization_index);
    }

    /// n[j,t] ~ CN(0, noise_power I_N).
    inline ApUeTable<CVec> draw_pilot_noise(const NetworkConfig &config, std::size_t num_aps, std::size_t num_pilots,
                                            std::size_t setup_index, std::size_t realization_index)
    {
        auto eng = substream(config.seed, Stream::pilot_noise, setup_index, realization_index);
        const double sigma = std::sqrt(config.noise_power);
        ApUeTable<CVec> n(num_aps, num_pilots);
        for (std::size_t j = 0; j < num_aps; ++j)
            for (std::size_t t = 0; t < num_pilots; ++t)
                n(j, t) = sigma * complex_normal_vector(eng, static_cast<Eigen::Index>(config.antennas_per_ap));
        return n;
    }

    /// y_pilot[j,t] = sum over co-pilot UEs i of sqrt(p tau_p) h[j,i] + n[j,t].
    inline ApUeTable<CVec> despread_pilots(const ApUeTable<CVec> &h, const ServingAssignment &asg,
                                           const NetworkConfig &config, const ApUeTable<CVec> &noise)
    {
        const double amp = std::sqrt(config.ue_power * static_cast<double>(config.tau_p));
        ApUeTable<CVec> y(h.num_aps(), asg.num_pilots);
        for (std::size_t j = 0; j < h.num_aps(); ++j)
            for (std::size_t t = 0; t < asg.num_pilots; ++t)
            {
                CVec acc = noise(j, t);
                for (auto i : asg.copilot_sets[t])
                    acc += amp * h(j, i);
                y(j, t) = std::move(acc);
            }
        return y;
    }

    /// Draws one full coherence block for a setup.
    inline ChannelState draw_state(const ApUeTable<CMat> &factors, const ServingAssignment &asg,
                                   const NetworkConfig &config, std::size_t setup_index, std::size_t realization_index)
    {
        ChannelState s;
        s.h = draw_channels(factors, config.seed, setup_index, realization_index);
        s.pilot_noise = draw_pilot_noise(config, factors.num_aps(), asg.num_pilots, setup_index, realization_index);
        s.y_pilot = despread_pilots(s.h, asg, config, s.pilot_noise);
        return s;
    }

    // ----- MMSE estimates ----------------------------------------------------

    /// Channel estimates visible under one estimation scope. Out-of-scope
    /// lookups throw LookupError; error covariances are statistics and are
    /// always available.
    class ChannelEstimates
    {
    public:
        ChannelEstimates() = default;
        ChannelEstimates(EstimationScope scope, ApUeTable<CVec> h_hat, ApUeTable<char> available,
                         std::shared_ptr<const EstimationStatistics> stats)
            : scope_(scope), h_hat_(std::move(h_hat)), available_(std::move(available)), stats_(std::move(stats)) {}

        EstimationScope scope() const { return scope_; }
        std::size_t num_aps() const { return h_hat_.num_aps(); }
        std::size_t num_ues() const { return h_hat_.num_ues(); }
        std::size_t antennas() const { return stats_->antennas; }

        bool has(std::size_t j, std::size_t k) const { return available_(j, k) != 0; }

        const CVec &h_hat(std::size_t j, std::size_t k) const
        {
            if (!has(j, k))
                throw LookupError("channel estimate of UE " + std::to_string(k) + " at AP " + std::to_string(j) +
                                  " is outside the estimation scope");
            return h_hat_(j, k);
        }

        const CMat &C(std::size_t j, std::size_t k) const { return stats_->error_cov(j, k); }
        const EstimationStatistics &statistics() const { return *stats_; }

        /// Same estimates, restricted to the UEs each AP serves.
        ChannelEstimates restricted_to_served(const ServingAssignment &asg) const
        {
            ApUeTable<char> avail(num_aps(), num_ues(), 0);
            for (std::size_t j = 0; j < num_aps(); ++j)
                for (std::size_t k = 0; k < num_ues(); ++k)
                    avail(j, k) = static_cast<char>(has(j, k) && asg.serves(j, k));
            return ChannelEstimates(EstimationScope::served_only, h_hat_, std::move(avail), stats_);
        }

    private:
        EstimationScope scope_ = EstimationScope::all_ues;
        ApUeTable<CVec> h_hat_;
        ApUeTable<char> available_;
        std::shared_ptr<const EstimationStatistics> stats_;
    };

    /// h_hat[j,k] = sqrt(p tau_p) R[j,k] Psi[j,t_k]^{-1} y_pilot[j,t_k] for all
    /// (j,k) in scope. With all_ues every AP that serves anyone estimates all K
    /// UEs; with served_only AP j estimates k in U_j.
    inline ChannelEstimates mmse_estimate(const ApUeTable<CVec> &y_pilot,
                                          std::shared_ptr<const EstimationStatistics> est_stats,
                                          const ServingAssignment &asg, EstimationScope scope)
    {
        const std::size_t L = asg.num_aps, K = asg.num_ues;
        ApUeTable<CVec> h_hat(L, K);
        ApUeTable<char> avail(L, K, 0);
        for (std::size_t j = 0; j < L; ++j)
        {
            if (asg.served_ues[j].empty())
                continue;
            for (std::size_t k = 0; k < K; ++k)
            {
                if (scope == EstimationScope::served_only && !asg.serves(j, k))
                    continue;
                h_hat(j, k) = est_stats->estimator(j, k) * y_pilot(j, asg.pilot_of[k]);
                avail(j, k) = 1;
            }
        }
        return ChannelEstimates(scope, std::move(h_hat), std::move(avail), std::move(est_stats));
    }
}
