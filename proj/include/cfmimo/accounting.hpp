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

// Fronthaul and complex-multiplication accounting per coherence block.
//
// Multiplication counting convention, applied uniformly to every scheme:
//   Gram accumulation of |S| outer products of M-vectors   |S| (M^2 + M) / 2
//   solving one M x M Hermitian system (elimination)        (M^3 - M) / 3 + M^2
//   combining tau_u data samples with an M-vector           M tau_u
//   MADUO message at one ASAP (fused CSI, mu)               Omega N + N^2 + N
// Channel estimation, error-covariance sums and LSFD weights are statistics
// or common to all schemes and are not counted.

#pragma once

#include "cfmimo/assignment.hpp"
#include "cfmimo/config.hpp"
#include "cfmimo/scheme.hpp"

#include <numeric>

namespace cfmimo
{
    using Count = std::uint64_t;

    namespace cost
    {
        constexpr Count gram(Count outer_products, Count dim) { return outer_products * (dim * dim + dim) / 2; }
        constexpr Count solve(Count dim) { return (dim * dim * dim - dim) / 3 + dim * dim; }
        constexpr Count combine(Count dim, Count samples) { return dim * samples; }
        constexpr Count message(Count omega, Count antennas) { return omega * antennas + antennas * antennas + antennas; }
    }

    /// Complex scalars sent to masters per coherence block:
    /// sum_j (tau_u + Omega + 1)(|U_j| - |U_j^master|), Omega = K or |U_j|.
    inline Count fronthaul_maduo(const ServingAssignment &asg, const NetworkConfig &config, bool scalable)
    {
        Count total = 0;
        for (std::size_t j = 0; j < asg.num_aps; ++j)
        {
            const Count served = asg.served_ues[j].size();
            const Count omega = scalable ? served : asg.num_ues;
            total += (config.tau_u() + omega + 1) * (served - asg.master_ues[j].size());
        }
        return total;
    }

    struct BaselineFronthaul
    {
        Count centralized = 0; // every AP forwards all pilot and data samples
        Count distributed = 0; // one soft estimate per data sample and served UE
    };

    inline BaselineFronthaul fronthaul_baselines(const ServingAssignment &asg, const NetworkConfig &config)
    {
        BaselineFronthaul b;
        b.centralized = Count{config.tau_c} * config.antennas_per_ap * asg.num_aps;
        Count served = 0;
        for (const auto &u : asg.served_ues)
            served += u.size();
        b.distributed = Count{config.tau_u()} * served;
        return b;
    }

    enum class FronthaulScheme
    {
        centralized,
        distributed,
        maduo,
        maduo_scl,
    };

    inline constexpr std::array<FronthaulScheme, 4> all_fronthaul_schemes{
        FronthaulScheme::centralized, FronthaulScheme::distributed, FronthaulScheme::maduo,
        FronthaulScheme::maduo_scl};

    constexpr std::string_view fronthaul_scheme_name(FronthaulScheme s)
    {
        switch (s)
        {
        case FronthaulScheme::centralized: return "centralized";
        case FronthaulScheme::distributed: return "distributed";
        case FronthaulScheme::maduo: return "maduo";
        case FronthaulScheme::maduo_scl: return "maduo_scl";
        }
        return "unknown";
    }

    inline Count fronthaul(FronthaulScheme s, const ServingAssignment &asg, const NetworkConfig &config)
    {
        switch (s)
        {
        case FronthaulScheme::centralized: return fronthaul_baselines(asg, config).centralized;
        case FronthaulScheme::distributed: return fronthaul_baselines(asg, config).distributed;
        case FronthaulScheme::maduo: return fronthaul_maduo(asg, config, false);
        case FronthaulScheme::maduo_scl: return fronthaul_maduo(asg, config, true);
        }
        throw DomainError("unknown fronthaul scheme");
    }

    /// Complex multiplications to compute the combiner(s) of UE k and combine
    /// its tau_u data samples.
    inline Count mult_count(Scheme scheme, const ServingAssignment &asg, const NetworkConfig &config, std::size_t k)
    {
        const Count N = config.antennas_per_ap;
        const Count tau_u = config.tau_u();
        const Count K = asg.num_ues;
        const Count serving = asg.serving_aps[k].size();

        switch (scheme)
        {
        case Scheme::c_mmse:
        case Scheme::p_mmse: {
            const Count M = N * serving;
            const Count S = scheme == Scheme::c_mmse ? K : asg.partners[k].size();
            return cost::gram(S, M) + cost::solve(M) + cost::combine(M, tau_u);
        }
        case Scheme::l_mmse:
        case Scheme::lp_mmse: {
            Count total = cost::combine(serving, tau_u); // LSFD fusion at the CPU
            for (auto j : asg.serving_aps[k])
            {
                const Count S = scheme == Scheme::l_mmse ? K : asg.served_ues[j].size();
                total += cost::gram(S, N) + cost::solve(N) + cost::combine(N, tau_u);
            }
            return total;
        }
        case Scheme::maduo:
        case Scheme::maduo_scl: {
            const bool scl = scheme == Scheme::maduo_scl;
            const std::size_t l = asg.master_of[k];
            const Count M = N + serving - 1;
            // scalable: only partners of k have a nonzero column in H or G
            const Count master_interferers = (scl ? asg.partners[k].size() : K) - 1;
            Count total = cost::gram(master_interferers, M) + cost::solve(M) + cost::combine(M, tau_u);
            for (auto j : asg.serving_aps[k])
            {
                if (j == l)
                    continue;
                const Count S = scl ? asg.served_ues[j].size() : K;
                total += cost::gram(S, N) + cost::solve(N) + cost::combine(N, tau_u) + cost::message(S, N);
            }
            return total;
        }
        }
        throw DomainError("mult_count: unknown scheme");
    }

    struct CostReport
    {
        Scheme scheme{};
        std::size_t num_ues = 0;
        std::vector<Count> per_ue_mults;
        double mean_mults = 0.0;
    };

    inline CostReport complexity_report(Scheme scheme, const ServingAssignment &asg, const NetworkConfig &config)
    {
        CostReport r;
        r.scheme = scheme;
        r.num_ues = asg.num_ues;
        r.per_ue_mults.reserve(asg.num_ues);
        for (std::size_t k = 0; k < asg.num_ues; ++k)
            r.per_ue_mults.push_back(mult_count(scheme, asg, config, k));
        const Count sum = std::accumulate(r.per_ue_mults.begin(), r.per_ue_mults.end(), Count{0});
        r.mean_mults = static_cast<double>(sum) / static_cast<double>(asg.num_ues);
        return r;
    }
}
