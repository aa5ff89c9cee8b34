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

#include "cfmimo/channel.hpp"
#include "cfmimo/combining.hpp"
#include "cfmimo/maduo.hpp"
#include "cfmimo/scheme.hpp"
#include "cfmimo/topology.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>

namespace cfmimo
{
    struct SinrSample
    {
        Scheme scheme{};
        std::size_t setup = 0;
        std::size_t realization = 0;
        std::size_t ue = 0;
        double sinr = 0.0;
    };

    struct SeResult
    {
        Scheme scheme{};
        std::size_t setup = 0;
        std::size_t ue = 0;
        double se = 0.0;
    };

    inline double prelog(const NetworkConfig &config)
    {
        return static_cast<double>(config.tau_u()) / static_cast<double>(config.tau_c);
    }

    /// Instantaneous SINR of a centralized combiner over the serving antennas
    /// of k, with all K UEs in the interference:
    ///   p |v^H h_k|^2 / (v^H (sum_{i!=k} p h_i h_i^H + sum_i p C_i + s2 I) v)
    /// `est` must hold all-UE estimates at the serving APs.
    inline double sinr_centralized(const CentralizedCombiner &c, const ChannelEstimates &est,
                                   const ServingAssignment &asg, const NetworkConfig &config, std::size_t k)
    {
        if (c.v.squaredNorm() == 0.0)
            throw DomainError("sinr_centralized: zero combiner");
        const double p = config.ue_power;
        const auto N = static_cast<Eigen::Index>(est.antennas());
        double interference = 0.0;
        for (std::size_t i = 0; i < asg.num_ues; ++i)
            if (i != k)
                interference += std::norm(c.v.dot(stacked_estimate(est, c.aps, i)));
        double error_noise = 0.0;
        for (std::size_t b = 0; b < c.aps.size(); ++b)
        {
            const CVec vb = c.v.segment(static_cast<Eigen::Index>(b) * N, N);
            error_noise += p * vb.dot(est.statistics().error_sum_all[c.aps[b]] * vb).real() +
                           config.noise_power * vb.squaredNorm();
        }
        const double signal = p * std::norm(c.v.dot(stacked_estimate(est, c.aps, k)));
        return signal / (p * interference + error_noise);
    }

    /// Moment-based distributed SE: prelog * log2(1 + p|a^H m|^2 / (a^H Q a)).
    inline double se_distributed(const LsfdWeights &w, const LsfdMoments &m, const NetworkConfig &config)
    {
        return prelog(config) * std::log2(1.0 + lsfd_sinr(w.a, m, config));
    }

    // ----- Per-setup context --------------------------------------------------

    struct SetupContext
    {
        NetworkConfig config;
        std::size_t setup_index = 0;
        NetworkSetup setup;
        ServingAssignment assignment;
        std::shared_ptr<const EstimationStatistics> estimation;
        ApUeTable<CMat> factors;
    };

    inline SetupContext prepare_setup(const NetworkConfig &config, std::size_t setup_index)
    {
        SetupContext ctx;
        ctx.config = config;
        ctx.setup_index = setup_index;
        ctx.setup = generate_setup(config, setup_index);
        ctx.assignment = assign(ctx.setup.stats, config);
        ctx.estimation = std::make_shared<const EstimationStatistics>(
            estimation_statistics(ctx.setup.stats, ctx.assignment, config));
        ctx.factors = correlation_factors(ctx.setup.stats);
        return ctx;
    }

    /// Per-UE outputs of every MADUO-type scheme on one realization, plus the
    /// quantities used by the per-sample sandwich checks.
    struct MaduoOutcome
    {
        double sinr = 0.0;
        double master_only_sinr = 0.0;
    };

    /// Non-scalable MADUO for UE k: L-MMSE ASAPs, all-UE CSI.
    inline MaduoOutcome evaluate_maduo(const ChannelEstimates &est_all, const ServingAssignment &asg,
                                       const NetworkConfig &config, std::size_t k)
    {
        std::vector<AsapMessage> msgs;
        for (auto j : asg.asaps(k))
            msgs.push_back(asap_message(est_all, asg, config, j, k, EstimationScope::all_ues));
        const MapProblem P = build_map_problem(est_all, std::move(msgs), asg, config, k, EstimationScope::all_ues);
        const MaduoCombiner c = map_combiner(P);
        return MaduoOutcome{maduo_sinr(P, c.v, config), master_only_sinr(P, config)};
    }

    /// Scalable MADUO for UE k. The combiner is built from the scalable
    /// messages; its SINR is evaluated against the full interference model
    /// of the same ASAP combiners (all UEs, all error terms).
    inline double evaluate_maduo_scl(const ChannelEstimates &est_all, const ChannelEstimates &est_served,
                                     const ServingAssignment &asg, const NetworkConfig &config, std::size_t k)
    {
        std::vector<AsapMessage> scalable, full;
        for (auto j : asg.asaps(k))
        {
            const CVec v = lp_mmse(est_served, asg, config, j, k);
            scalable.push_back(make_asap_message(est_served, asg, config, j, k, v, EstimationScope::served_only, {}));
            full.push_back(make_asap_message(est_all, asg, config, j, k, v, EstimationScope::all_ues, {}));
        }
        const MapProblem P =
            build_map_problem(est_served, std::move(scalable), asg, config, k, EstimationScope::served_only);
        const MaduoCombiner c = map_combiner(P);
        const MapProblem truth = build_map_problem(est_all, std::move(full), asg, config, k, EstimationScope::all_ues);
        return maduo_sinr(truth, c.v, config);
    }

    /// Gains g_ki[r] = v_{A_k[r],k}^H h_{A_k[r],i} and combiner powers for one
    /// distributed scheme and one realization.
    struct DistributedSample
    {
        CMat gains;
        Eigen::VectorXd powers;
    };

    inline DistributedSample distributed_sample(Scheme scheme, const ChannelEstimates &est_all,
                                                const ChannelEstimates &est_served, const ApUeTable<CVec> &h,
                                                const ServingAssignment &asg, const NetworkConfig &config,
                                                std::size_t k)
    {
        const auto &aps = asg.serving_aps[k];
        DistributedSample s;
        s.gains.resize(static_cast<Eigen::Index>(aps.size()), static_cast<Eigen::Index>(asg.num_ues));
        s.powers.resize(static_cast<Eigen::Index>(aps.size()));
        for (std::size_t r = 0; r < aps.size(); ++r)
        {
            const std::size_t j = aps[r];
            const CVec v = scheme == Scheme::l_mmse ? l_mmse(est_all, asg, config, j, k)
                                                    : lp_mmse(est_served, asg, config, j, k);
            for (std::size_t i = 0; i < asg.num_ues; ++i)
                s.gains(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)) = v.dot(h(j, i));
            s.powers(static_cast<Eigen::Index>(r)) = v.squaredNorm();
        }
        return s;
    }

    /// Everything one realization contributes, for all requested schemes.
    struct RealizationOutcome
    {
        // [scheme position][ue]; NaN for distributed schemes
        std::vector<std::vector<double>> sinr;
        std::vector<std::vector<double>> master_only_sinr; // only filled for maduo
        // [scheme position][ue]; empty for non-distributed schemes
        std::vector<std::vector<DistributedSample>> distributed;
    };

    inline void check_sinr(double s, Scheme scheme)
    {
        if (!(s >= 0.0) || !std::isfinite(s))
            throw NumericalError("invalid SINR produced by " + std::string(scheme_name(scheme)));
    }

    inline RealizationOutcome evaluate_realization(const SetupContext &ctx, std::size_t realization,
                                                   const std::vector<Scheme> &schemes)
    {
        const auto &asg = ctx.assignment;
        const auto &cfg = ctx.config;
        const ChannelState state = draw_state(ctx.factors, asg, cfg, ctx.setup_index, realization);
        const ChannelEstimates est_all = mmse_estimate(state.y_pilot, ctx.estimation, asg, EstimationScope::all_ues);
        const ChannelEstimates est_served = est_all.restricted_to_served(asg);

        const std::size_t K = asg.num_ues;
        RealizationOutcome out;
        out.sinr.assign(schemes.size(), std::vector<double>(K, std::numeric_limits<double>::quiet_NaN()));
        out.master_only_sinr.assign(schemes.size(), {});
        out.distributed.assign(schemes.size(), {});
        for (std::size_t s = 0; s < schemes.size(); ++s)
        {
            const Scheme scheme = schemes[s];
            for (std::size_t k = 0; k < K; ++k)
            {
                switch (scheme)
                {
                case Scheme::c_mmse:
                    out.sinr[s][k] = sinr_centralized(c_mmse(est_all, asg, cfg, k), est_all, asg, cfg, k);
                    break;
                case Scheme::p_mmse:
                    out.sinr[s][k] = sinr_centralized(p_mmse(est_all, asg, cfg, k), est_all, asg, cfg, k);
                    break;
                case Scheme::maduo: {
                    const auto o = evaluate_maduo(est_all, asg, cfg, k);
                    out.sinr[s][k] = o.sinr;
                    out.master_only_sinr[s].resize(K);
                    out.master_only_sinr[s][k] = o.master_only_sinr;
                    break;
                }
                case Scheme::maduo_scl:
                    out.sinr[s][k] = evaluate_maduo_scl(est_all, est_served, asg, cfg, k);
                    break;
                case Scheme::l_mmse:
                case Scheme::lp_mmse:
                    out.distributed[s].push_back(distributed_sample(scheme, est_all, est_served, state.h, asg, cfg, k));
                    break;
                }
                if (!is_distributed(scheme))
                    check_sinr(out.sinr[s][k], scheme);
            }
        }
        return out;
    }

    // ----- Deterministic worker pool -----------------------------------------

    /// Runs fn(i) for i in [0, n) on up to `workers` threads. Exceptions are
    /// rethrown on the caller (the one with the lowest index wins).
    inline void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)> &fn)
    {
        workers = std::max<std::size_t>(1, std::min(workers, n));
        if (workers == 1)
        {
            for (std::size_t i = 0; i < n; ++i)
                fn(i);
            return;
        }
        std::atomic<std::size_t> next{0};
        std::mutex mu;
        std::size_t failed_at = n;
        std::exception_ptr failure;
        {
            std::vector<std::jthread> pool;
            for (std::size_t w = 0; w < workers; ++w)
                pool.emplace_back([&] {
                    for (std::size_t i = next++; i < n; i = next++)
                    {
                        try
                        {
                            fn(i);
                        }
                        catch (...)
                        {
                            std::lock_guard lock(mu);
                            if (i < failed_at)
                            {
                                failed_at = i;
                                failure = std::current_exception();
                            }
                        }
                    }
                });
        }
        if (failure)
            std::rethrow_exception(failure);
    }

    // ----- Campaigns ----------------------------------------------------------

    struct CampaignOptions
    {
        std::size_t workers = 1;
        bool collect_sinr = false;
        // Per-setup callback, called in setup order after each setup completes.
        std::function<void(const SetupContext &)> on_setup;
    };

    struct CampaignResult
    {
        std::vector<SeResult> se;          // ordered by setup, scheme (as requested), UE
        std::vector<SinrSample> sinr;      // when collect_sinr; also master-only entries below
        std::vector<SinrSample> master_only; // maduo master-alone SINRs, same ordering
    };

    /// Evaluates one setup: all realizations, all schemes on the same draws.
    /// Realizations are evaluated in parallel batches and reduced in
    /// realization order, so the output does not depend on `workers`.
    inline void run_setup(const SetupContext &ctx, const std::vector<Scheme> &schemes, const CampaignOptions &opt,
                          CampaignResult &result)
    {
        const auto &cfg = ctx.config;
        const auto &asg = ctx.assignment;
        const std::size_t K = asg.num_ues;
        const std::size_t R = cfg.num_realizations;

        std::vector<std::vector<double>> log_sum(schemes.size(), std::vector<double>(K, 0.0));
        std::vector<std::vector<LsfdAccumulator>> acc(schemes.size());
        for (std::size_t s = 0; s < schemes.size(); ++s)
            if (is_distributed(schemes[s]))
                for (std::size_t k = 0; k < K; ++k)
                    acc[s].emplace_back(asg.serving_aps[k]);

        const std::size_t batch = std::max<std::size_t>(1, opt.workers) * 4;
        std::vector<RealizationOutcome> outcomes;
        for (std::size_t start = 0; start < R; start += batch)
        {
            const std::size_t count = std::min(batch, R - start);
            outcomes.assign(count, {});
            parallel_for(count, opt.workers,
                         [&](std::size_t n) { outcomes[n] = evaluate_realization(ctx, start + n, schemes); });
            for (std::size_t n = 0; n < count; ++n)
            {
                const auto &o = outcomes[n];
                for (std::size_t s = 0; s < schemes.size(); ++s)
                {
                    for (std::size_t k = 0; k < K; ++k)
                    {
                        if (is_distributed(schemes[s]))
                        {
                            const auto &d = o.distributed[s][k];
                            acc[s][k].add(d.gains, d.powers, k, asg.partners[k]);
                            continue;
                        }
                        log_sum[s][k] += std::log2(1.0 + o.sinr[s][k]);
                        if (opt.collect_sinr)
                        {
                            result.sinr.push_back({schemes[s], ctx.setup_index, start + n, k, o.sinr[s][k]});
                            if (!o.master_only_sinr[s].empty())
                                result.master_only.push_back(
                                    {schemes[s], ctx.setup_index, start + n, k, o.master_only_sinr[s][k]});
                        }
                    }
                }
            }
        }

        for (std::size_t s = 0; s < schemes.size(); ++s)
        {
            for (std::size_t k = 0; k < K; ++k)
            {
                double se = 0.0;
                if (is_distributed(schemes[s]))
                {
                    if (R < 2)
                        throw StatisticsError("distributed schemes need at least 2 realizations per setup");
                    const LsfdMoments m = acc[s][k].moments();
                    const LsfdMode mode = schemes[s] == Scheme::l_mmse ? LsfdMode::optimal : LsfdMode::nearly_optimal;
                    se = se_distributed(lsfd_weights(m, cfg, mode), m, cfg);
                }
                else
                {
                    se = prelog(cfg) * log_sum[s][k] / static_cast<double>(R);
                }
                if (!(se >= 0.0) || !std::isfinite(se))
                    throw NumericalError("invalid SE produced by " + std::string(scheme_name(schemes[s])));
                result.se.push_back({schemes[s], ctx.setup_index, k, se});
            }
        }
    }

    inline CampaignResult run_campaign(const NetworkConfig &config, const std::vector<Scheme> &schemes,
                                       const CampaignOptions &opt = {})
    {
        config.validate();
        if (schemes.empty())
            throw ConfigError("run_campaign: no schemes requested");
        CampaignResult result;
        for (std::size_t s = 0; s < config.num_setups; ++s)
        {
            const SetupContext ctx = prepare_setup(config, s);
            if (opt.on_setup)
                opt.on_setup(ctx);
            run_setup(ctx, schemes, opt, result);
        }
        return result;
    }

    /// Empirical CDF: distinct sorted values with P(X <= value).
    inline std::vector<std::pair<double, double>> cdf(std::vector<double> values)
    {
        if (values.empty())
            throw DomainError("cdf: empty input");
        std::sort(values.begin(), values.end());
        std::vector<std::pair<double, double>> out;
        const double n = static_cast<double>(values.size());
        for (std::size_t i = 0; i < values.size(); ++i)
        {
            if (i + 1 < values.size() && values[i + 1] == values[i])
                continue;
            out.emplace_back(values[i], static_cast<double>(i + 1) / n);
        }
        return out;
    }
}
