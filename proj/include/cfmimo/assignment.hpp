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
#include "cfmimo/topology.hpp"

#include <algorithm>
#include <ostream>

namespace cfmimo
{
    using IndexSet = std::vector<std::size_t>; // always sorted ascending

    /// Pilots, serving clusters and master APs. All indices are 0-based:
    /// pilots in [0, tau_p), APs in [0, L), UEs in [0, K).
    struct ServingAssignment
    {
        std::size_t num_aps = 0;
        std::size_t num_ues = 0;
        std::size_t num_pilots = 0;

        std::vector<std::size_t> pilot_of;  // t_k
        std::vector<IndexSet> copilot_sets; // per pilot: UEs sharing it
        std::vector<IndexSet> serving_aps;  // A_k
        std::vector<IndexSet> served_ues;   // U_j
        std::vector<std::size_t> master_of; // l_k
        std::vector<IndexSet> master_ues;   // U_j^master
        std::vector<IndexSet> partners;     // S_k
        ApUeTable<char> mask;               // D_{j,k} != 0

        bool serves(std::size_t j, std::size_t k) const { return mask(j, k) != 0; }

        /// Serving APs of k other than its master, ascending.
        IndexSet asaps(std::size_t k) const
        {
            IndexSet out;
            for (auto j : serving_aps[k])
                if (j != master_of[k])
                    out.push_back(j);
            return out;
        }

        bool operator==(const ServingAssignment &) const = default;
    };

    /// S_k: UEs served by at least one AP that also serves k (contains k).
    inline IndexSet partner_set(const ServingAssignment &a, std::size_t k)
    {
        if (k >= a.num_ues)
            throw LookupError("partner_set: UE index out of range");
        std::vector<char> hit(a.num_ues, 0);
        for (auto j : a.serving_aps[k])
            for (auto i : a.served_ues[j])
                hit[i] = 1;
        IndexSet out;
        for (std::size_t i = 0; i < a.num_ues; ++i)
            if (hit[i])
                out.push_back(i);
        return out;
    }

    /// Completes the derived sets (A_k, U_j, masters, partners) from mask,
    /// pilot_of and master_of.
    inline void finalize_assignment(ServingAssignment &a)
    {
        const std::size_t L = a.num_aps, K = a.num_ues;
        a.copilot_sets.assign(a.num_pilots, {});
        for (std::size_t k = 0; k < K; ++k)
            a.copilot_sets[a.pilot_of[k]].push_back(k);
        a.serving_aps.assign(K, {});
        a.served_ues.assign(L, {});
        for (std::size_t j = 0; j < L; ++j)
            for (std::size_t k = 0; k < K; ++k)
                if (a.serves(j, k))
                {
                    a.serving_aps[k].push_back(j);
                    a.served_ues[j].push_back(k);
                }
        a.master_ues.assign(L, {});
        for (std::size_t k = 0; k < K; ++k)
            a.master_ues[a.master_of[k]].push_back(k);
        a.partners.assign(K, {});
        for (std::size_t k = 0; k < K; ++k)
            a.partners[k] = partner_set(a, k);
    }

    /// Joint pilot, master-AP and cluster assignment.
    ///
    /// 1. The master of UE k is the AP with the largest beta[., k].
    /// 2. UEs take pilots one at a time in index order; UE k picks the pilot
    ///    with the least accumulated interference p*tau_p*beta[l_k, i] from
    ///    earlier holders i at its master (ties: lowest pilot).
    /// 3. Each master serves its UEs. For every pilot an AP is not already
    ///    master on, it also serves the strongest UE using that pilot (ties:
    ///    lowest UE index).
    inline ServingAssignment assign(const ChannelStatistics &stats, const NetworkConfig &config)
    {
        if (config.tau_p == 0)
            throw ConfigError("assign: tau_p must be at least 1");
        const std::size_t L = stats.num_aps(), K = stats.num_ues();
        for (std::size_t j = 0; j < L; ++j)
            for (std::size_t k = 0; k < K; ++k)
                if (!(stats.beta(j, k) > 0.0) || !std::isfinite(stats.beta(j, k)))
                    throw StatisticsError("assign: beta must be finite and positive");

        ServingAssignment a;
        a.num_aps = L;
        a.num_ues = K;
        a.num_pilots = config.tau_p;
        a.mask = ApUeTable<char>(L, K, 0);
        a.master_of.resize(K);
        a.pilot_of.resize(K);

        const double pilot_gain = config.ue_power * static_cast<double>(config.tau_p);
        for (std::size_t k = 0; k < K; ++k)
        {
            std::size_t best = 0;
            for (std::size_t j = 1; j < L; ++j)
                if (stats.beta(j, k) > stats.beta(best, k))
                    best = j;
            a.master_of[k] = best;

            std::vector<double> interference(config.tau_p, 0.0);
            for (std::size_t i = 0; i < k; ++i)
                interference[a.pilot_of[i]] += pilot_gain * stats.beta(best, i);
            a.pilot_of[k] = static_cast<std::size_t>(
                std::min_element(interference.begin(), interference.end()) - interference.begin());
            a.mask(best, k) = 1;
        }

        for (std::size_t j = 0; j < L; ++j)
        {
            for (std::size_t t = 0; t < config.tau_p; ++t)
            {
                bool master_here = false;
                std::size_t strongest = K;
                for (std::size_t k = 0; k < K; ++k)
                {
                    if (a.pilot_of[k] != t)
                        continue;
                    if (a.master_of[k] == j)
                        master_here = true;
                    if (strongest == K || stats.beta(j, k) > stats.beta(j, strongest))
                        strongest = k;
                }
                if (!master_here && strongest != K)
                    a.mask(j, strongest) = 1;
            }
        }

        finalize_assignment(a);
        return a;
    }

    /// Checks the structural invariants; throws ProtocolError on the first violation.
    inline void verify_assignment(const ServingAssignment &a)
    {
        auto fail = [](const std::string &m) { throw ProtocolError("assignment invariant violated: " + m); };
        for (std::size_t k = 0; k < a.num_ues; ++k)
        {
            if (a.serving_aps[k].empty())
                fail("UE served by no AP");
            if (!a.serves(a.master_of[k], k))
                fail("master not in serving set");
            if (a.pilot_of[k] >= a.num_pilots)
                fail("pilot index out of range");
            if (!std::binary_search(a.partners[k].begin(), a.partners[k].end(), k))
                fail("UE missing from its own partner set");
        }
        for (std::size_t j = 0; j < a.num_aps; ++j)
        {
            for (auto k : a.served_ues[j])
                if (!std::binary_search(a.serving_aps[k].begin(), a.serving_aps[k].end(), j))
                    fail("U_j / A_k inconsistency");
            for (auto k : a.master_ues[j])
                if (a.master_of[k] != j || !a.serves(j, k))
                    fail("master set inconsistency");
            // One UE per pilot, except where an AP is master of several co-pilot UEs.
            std::vector<std::size_t> per_pilot(a.num_pilots, 0), masters(a.num_pilots, 0);
            for (auto k : a.served_ues[j])
                ++per_pilot[a.pilot_of[k]];
            for (auto k : a.master_ues[j])
                ++masters[a.pilot_of[k]];
            for (std::size_t t = 0; t < a.num_pilots; ++t)
                if (per_pilot[t] > std::max<std::size_t>(1, masters[t]))
                    fail("AP serves several UEs on one pilot");
        }
    }

    /// Debug dump: ue,pilot,master,serving_aps (serving APs separated by ';').
    inline void write_assignment_csv(std::ostream &os, const ServingAssignment &a)
    {
        os << "ue,pilot,master,serving_aps\n";
        for (std::size_t k = 0; k < a.num_ues; ++k)
        {
            os << k << ',' << a.pilot_of[k] << ',' << a.master_of[k] << ',';
            for (std::size_t n = 0; n < a.serving_aps[k].size(); ++n)
                os << (n ? ";" : "") << a.serving_aps[k][n];
            os << '\n';
        }
    }
}
