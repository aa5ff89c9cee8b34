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

// Helpers shared by the unit tests and the acceptance binary.

#pragma once

#include "cfmimo/io.hpp"

namespace cfmimo::testing
{
    /// Small network on a 300 m square so that every AP sees every UE.
    inline NetworkConfig desk_config(std::size_t L, std::size_t N, std::size_t K, std::size_t tau_p,
                                     std::uint64_t seed = 7)
    {
        NetworkConfig c;
        c.num_aps = L;
        c.antennas_per_ap = N;
        c.num_ues = K;
        c.tau_p = tau_p;
        c.side_length = 300.0;
        c.num_setups = 1;
        c.num_realizations = 8;
        c.seed = seed;
        return c;
    }

    /// One realization of a setup: statistics, assignment and both estimate scopes.
    struct Instance
    {
        SetupContext ctx;
        ChannelState state;
        ChannelEstimates est_all;
        ChannelEstimates est_served;

        const ServingAssignment &asg() const { return ctx.assignment; }
        const NetworkConfig &cfg() const { return ctx.config; }
    };

    inline Instance make_instance(const NetworkConfig &cfg, std::size_t setup, std::size_t realization)
    {
        Instance in;
        in.ctx = prepare_setup(cfg, setup);
        in.state = draw_state(in.ctx.factors, in.ctx.assignment, cfg, setup, realization);
        in.est_all = mmse_estimate(in.state.y_pilot, in.ctx.estimation, in.ctx.assignment, EstimationScope::all_ues);
        in.est_served = in.est_all.restricted_to_served(in.ctx.assignment);
        return in;
    }

    /// Every AP serves every UE; UE k on pilot k, all masters at AP 0.
    inline ServingAssignment full_mask(std::size_t L, std::size_t K)
    {
        ServingAssignment a;
        a.num_aps = L;
        a.num_ues = K;
        a.num_pilots = K;
        for (std::size_t k = 0; k < K; ++k)
            a.pilot_of.push_back(k);
        a.master_of.assign(K, 0);
        a.mask = ApUeTable<char>(L, K, 1);
        finalize_assignment(a);
        return a;
    }

    /// Estimates with hand-chosen h_hat and C, every pair in scope.
    inline ChannelEstimates hand_estimates(const ServingAssignment &a, const ApUeTable<CVec> &h_hat,
                                           const ApUeTable<CMat> &C)
    {
        auto es = std::make_shared<EstimationStatistics>();
        const auto N = h_hat(0, 0).size();
        es->antennas = static_cast<std::size_t>(N);
        es->error_cov = C;
        es->error_sum_all.assign(a.num_aps, CMat::Zero(N, N));
        es->error_sum_served.assign(a.num_aps, CMat::Zero(N, N));
        for (std::size_t j = 0; j < a.num_aps; ++j)
            for (std::size_t k = 0; k < a.num_ues; ++k)
            {
                es->error_sum_all[j] += C(j, k);
                if (a.serves(j, k))
                    es->error_sum_served[j] += C(j, k);
            }
        return ChannelEstimates(EstimationScope::all_ues, h_hat, ApUeTable<char>(a.num_aps, a.num_ues, 1),
                                std::move(es));
    }

    struct StackedModel
    {
        CVec z;
        CMat B;
    };

    /// Covariance oracle for the master's observation of UE k. Over the
    /// stacked antennas of A_k, conditioned on the estimates,
    ///
    ///   y = sqrt(p) sum_i (h_hat_i + e_i) s_i + n,
    ///   cov(y minus the UE-k estimate term) = p sum_{i!=k} h_hat_i h_hat_i^H
    ///                                        + p blockdiag(sum_i C_ji) + s2 I.
    ///
    /// The master keeps its N samples and each ASAP r reduces its block with
    /// v_r^H; T is that linear map, so B = T cov T^H and z = T h_hat_k.
    /// `asap_combiners` follows ascending ASAP order.
    inline StackedModel stacked_model_oracle(const ChannelEstimates &est, const ServingAssignment &asg,
                                             const NetworkConfig &cfg, std::size_t k,
                                             const std::vector<CVec> &asap_combiners)
    {
        const auto &aps = asg.serving_aps[k];
        const auto N = static_cast<Eigen::Index>(est.antennas());
        const auto A = static_cast<Eigen::Index>(aps.size());
        const double p = cfg.ue_power;

        CMat cov = cfg.noise_power * CMat::Identity(N * A, N * A);
        for (std::size_t i = 0; i < asg.num_ues; ++i)
        {
            CVec hi(N * A);
            for (Eigen::Index b = 0; b < A; ++b)
            {
                hi.segment(b * N, N) = est.h_hat(aps[static_cast<std::size_t>(b)], i);
                cov.block(b * N, b * N, N, N) += p * est.C(aps[static_cast<std::size_t>(b)], i);
            }
            if (i != k)
                cov += p * hi * hi.adjoint();
        }

        CMat T = CMat::Zero(N + A - 1, N * A);
        Eigen::Index row = N;
        std::size_t r = 0;
        for (Eigen::Index b = 0; b < A; ++b)
        {
            if (aps[static_cast<std::size_t>(b)] == asg.master_of[k])
                T.block(0, b * N, N, N) = CMat::Identity(N, N);
            else
                T.block(row++, b * N, 1, N) = asap_combiners[r++].adjoint();
        }

        CVec hk(N * A);
        for (Eigen::Index b = 0; b < A; ++b)
            hk.segment(b * N, N) = est.h_hat(aps[static_cast<std::size_t>(b)], k);
        return {T * hk, T * cov * T.adjoint()};
    }

    inline CMat random_hermitian_pd(std::mt19937_64 &eng, Eigen::Index n, double ridge = 0.1)
    {
        CMat X(n, n);
        for (Eigen::Index c = 0; c < n; ++c)
            X.col(c) = complex_normal_vector(eng, n);
        CMat A = X * X.adjoint();
        A.diagonal().array() += ridge;
        return A;
    }

    /// Dense oracle: solves through the explicit inverse of a full-pivot LU.
    inline CVec dense_solve(const CMat &A, const CVec &b) { return A.fullPivLu().inverse() * b; }

    inline double median(std::vector<double> v)
    {
        std::sort(v.begin(), v.end());
        const std::size_t n = v.size();
        return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    }

    /// Spearman rank correlation for samples without ties.
    inline double spearman(const std::vector<double> &x, const std::vector<double> &y)
    {
        auto ranks = [](const std::vector<double> &v) {
            std::vector<std::size_t> idx(v.size());
            for (std::size_t i = 0; i < idx.size(); ++i)
                idx[i] = i;
            std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
            std::vector<double> r(v.size());
            for (std::size_t i = 0; i < idx.size(); ++i)
                r[idx[i]] = static_cast<double>(i);
            return r;
        };
        const auto rx = ranks(x), ry = ranks(y);
        const double n = static_cast<double>(x.size());
        double d2 = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i)
            d2 += (rx[i] - ry[i]) * (rx[i] - ry[i]);
        return 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
    }
}
