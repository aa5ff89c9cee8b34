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

#include "support.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace cfmimo;

namespace
{
    ServingAssignment hand_assignment(std::size_t L, std::size_t K, const std::vector<std::vector<std::size_t>> &served,
                                      const std::vector<std::size_t> &master)
    {
        ServingAssignment a;
        a.num_aps = L;
        a.num_ues = K;
        a.num_pilots = 1;
        a.pilot_of.assign(K, 0);
        a.master_of = master;
        a.mask = ApUeTable<char>(L, K, 0);
        for (std::size_t j = 0; j < served.size(); ++j)
            for (auto k : served[j])
                a.mask(j, k) = 1;
        finalize_assignment(a);
        return a;
    }

    // Plain-loop linear algebra that counts every complex multiplication and
    // division it performs.
    struct Counted
    {
        Count mults = 0;

        cd mul(cd a, cd b)
        {
            ++mults;
            return a * b;
        }
        cd div(cd a, cd b)
        {
            ++mults;
            return a / b;
        }

        // sum of x x^H over the vectors, upper triangle computed and mirrored
        CMat gram(const std::vector<CVec> &xs, Eigen::Index M)
        {
            CMat G = CMat::Zero(M, M);
            for (const auto &x : xs)
                for (Eigen::Index r = 0; r < M; ++r)
                    for (Eigen::Index c = r; c < M; ++c)
                        G(r, c) += mul(x(r), std::conj(x(c)));
            for (Eigen::Index r = 0; r < M; ++r)
                for (Eigen::Index c = 0; c < r; ++c)
                    G(r, c) = std::conj(G(c, r));
            return G;
        }

        // Gaussian elimination on [A | b] and back substitution
        CVec solve(CMat A, CVec b)
        {
            const Eigen::Index M = A.rows();
            for (Eigen::Index p = 0; p < M; ++p)
                for (Eigen::Index i = p + 1; i < M; ++i)
                {
                    const cd f = div(A(i, p), A(p, p));
                    for (Eigen::Index c = p + 1; c < M; ++c)
                        A(i, c) -= mul(f, A(p, c));
                    b(i) -= mul(f, b(p));
                }
            CVec x(M);
            for (Eigen::Index i = M - 1; i >= 0; --i)
            {
                cd s = b(i);
                for (Eigen::Index c = i + 1; c < M; ++c)
                    s -= mul(A(i, c), x(c));
                x(i) = div(s, A(i, i));
            }
            return x;
        }

        cd dot(const CVec &v, const CVec &y)
        {
            cd s = 0;
            for (Eigen::Index n = 0; n < v.size(); ++n)
                s += mul(std::conj(v(n)), y(n));
            return s;
        }

        CVec matvec(const CMat &Q, const CVec &v)
        {
            CVec out = CVec::Zero(Q.rows());
            for (Eigen::Index r = 0; r < Q.rows(); ++r)
                for (Eigen::Index c = 0; c < Q.cols(); ++c)
                    out(r) += mul(Q(r, c), v(c));
            return out;
        }

        void combine(const CVec &v, const std::vector<CVec> &data)
        {
            for (const auto &y : data)
                dot(v, y);
        }
    };

    std::vector<CVec> data_block(std::mt19937_64 &eng, std::size_t tau_u, Eigen::Index M)
    {
        std::vector<CVec> out;
        for (std::size_t n = 0; n < tau_u; ++n)
            out.push_back(complex_normal_vector(eng, M));
        return out;
    }

    // Local MMSE at AP j over `ues`, as an ASAP or a distributed AP computes it.
    CVec counted_local(Counted &ctr, const testing::Instance &in, std::size_t j, std::size_t k, const IndexSet &ues,
                       const CMat &error_sum)
    {
        const auto &cfg = in.cfg();
        const auto N = static_cast<Eigen::Index>(cfg.antennas_per_ap);
        std::vector<CVec> xs;
        for (auto i : ues)
            xs.push_back(in.est_all.h_hat(j, i));
        CMat A = cfg.ue_power * (ctr.gram(xs, N) + error_sum);
        A.diagonal().array() += cfg.noise_power;
        return cfg.ue_power * ctr.solve(A, in.est_all.h_hat(j, k));
    }

    IndexSet all_ues(std::size_t K)
    {
        IndexSet s(K);
        for (std::size_t i = 0; i < K; ++i)
            s[i] = i;
        return s;
    }

    /// Executes the processing of UE k for one scheme and one coherence block
    /// with counted arithmetic; checks that it reproduces the library combiners.
    Count instrumented_count(Scheme scheme, const testing::Instance &in, std::size_t k, std::mt19937_64 &eng)
    {
        const auto &cfg = in.cfg();
        const auto &asg = in.asg();
        const auto &es = *in.ctx.estimation;
        const auto N = static_cast<Eigen::Index>(cfg.antennas_per_ap);
        const std::size_t tau_u = cfg.tau_u();
        const double p = cfg.ue_power;
        Counted ctr;

        switch (scheme)
        {
        case Scheme::c_mmse:
        case Scheme::p_mmse: {
            const auto &aps = asg.serving_aps[k];
            const IndexSet ues = scheme == Scheme::c_mmse ? all_ues(asg.num_ues) : asg.partners[k];
            const Eigen::Index M = N * static_cast<Eigen::Index>(aps.size());
            std::vector<CVec> xs;
            for (auto i : ues)
                xs.push_back(stacked_estimate(in.est_all, aps, i));
            CMat A = p * (ctr.gram(xs, M) + stacked_error_sum(in.est_all, aps, ues));
            A.diagonal().array() += cfg.noise_power;
            const CVec v = p * ctr.solve(A, stacked_estimate(in.est_all, aps, k));
            const CVec lib = scheme == Scheme::c_mmse ? c_mmse(in.est_all, asg, cfg, k).v
                                                      : p_mmse(in.est_all, asg, cfg, k).v;
            REQUIRE((v - lib).norm() <= 1e-8 * lib.norm());
            ctr.combine(v, data_block(eng, tau_u, M));
            break;
        }
        case Scheme::l_mmse:
        case Scheme::lp_mmse: {
            for (auto j : asg.serving_aps[k])
            {
                const bool partial = scheme == Scheme::lp_mmse;
                const CVec v = counted_local(ctr, in, j, k, partial ? asg.served_ues[j] : all_ues(asg.num_ues),
                                             partial ? es.error_sum_served[j] : es.error_sum_all[j]);
                const CVec lib = partial ? lp_mmse(in.est_served, asg, cfg, j, k) : l_mmse(in.est_all, asg, cfg, j, k);
                REQUIRE((v - lib).norm() <= 1e-8 * lib.norm());
                ctr.combine(v, data_block(eng, tau_u, N));
            }
            // CPU-side LSFD fusion of |A_k| soft estimates per data sample
            ctr.combine(CVec::Ones(static_cast<Eigen::Index>(asg.serving_aps[k].size())),
                        data_block(eng, tau_u, static_cast<Eigen::Index>(asg.serving_aps[k].size())));
            break;
        }
        case Scheme::maduo:
        case Scheme::maduo_scl: {
            const bool scl = scheme == Scheme::maduo_scl;
            const std::size_t l = asg.master_of[k];
            const IndexSet asaps = asg.asaps(k);
            const auto R = static_cast<Eigen::Index>(asaps.size());
            std::vector<std::vector<cd>> fused(asaps.size(), std::vector<cd>(asg.num_ues, cd{}));
            Eigen::VectorXd mu(R);
            for (std::size_t r = 0; r < asaps.size(); ++r)
            {
                const std::size_t j = asaps[r];
                const IndexSet scope = scl ? asg.served_ues[j] : all_ues(asg.num_ues);
                const CMat &err = scl ? es.error_sum_served[j] : es.error_sum_all[j];
                const CVec v = counted_local(ctr, in, j, k, scope, err);
                ctr.combine(v, data_block(eng, tau_u, N));
                for (auto i : scope)
                    fused[r][i] = ctr.dot(v, in.est_all.h_hat(j, i));
                CMat Q = p * err;
                Q.diagonal().array() += cfg.noise_power;
                mu(static_cast<Eigen::Index>(r)) = ctr.dot(v, ctr.matvec(Q, v)).real();
            }
            const Eigen::Index M = N + R;
            std::vector<CVec> xs;
            for (std::size_t i = 0; i < asg.num_ues; ++i)
            {
                if (i == k || (scl && !std::binary_search(asg.partners[k].begin(), asg.partners[k].end(), i)))
                    continue;
                CVec x(M);
                x.head(N) = scl && !asg.serves(l, i) ? CVec::Zero(N) : in.est_all.h_hat(l, i);
                for (Eigen::Index r = 0; r < R; ++r)
                    x(N + r) = fused[static_cast<std::size_t>(r)][i];
                xs.push_back(x);
            }
            CMat B = p * ctr.gram(xs, M);
            B.topLeftCorner(N, N) += p * (scl ? es.error_sum_served[l] : es.error_sum_all[l]);
            B.topLeftCorner(N, N).diagonal().array() += cfg.noise_power;
            B.bottomRightCorner(R, R).diagonal() += mu.cast<cd>();
            CVec z(M);
            z.head(N) = in.est_all.h_hat(l, k);
            for (Eigen::Index r = 0; r < R; ++r)
                z(N + r) = fused[static_cast<std::size_t>(r)][k];
            const CVec v = ctr.solve(B, z);

            const auto scope = scl ? EstimationScope::served_only : EstimationScope::all_ues;
            const auto &est = scl ? in.est_served : in.est_all;
            std::vector<AsapMessage> msgs;
            for (auto j : asaps)
                msgs.push_back(asap_message(est, asg, cfg, j, k, scope));
            const CVec lib = map_combiner(build_map_problem(est, std::move(msgs), asg, cfg, k, scope)).v;
            REQUIRE((v - lib).norm() <= 1e-8 * lib.norm());
            ctr.combine(v, data_block(eng, tau_u, M));
            break;
        }
        }
        return ctr.mults;
    }
}

TEST_CASE("fronthaul formulas", "[accounting]")
{
    NetworkConfig c; // tau_c 200, tau_p 10, N 4
    c.num_ues = 40;

    SECTION("one AP with five UEs, one of which it masters")
    {
        // AP 0 serves UEs 0..4 and masters UE 0; AP 1 masters and serves 1..39.
        std::vector<std::size_t> master(40, 1), rest;
        master[0] = 0;
        for (std::size_t k = 1; k < 40; ++k)
            rest.push_back(k);
        const auto a = hand_assignment(2, 40, {{0, 1, 2, 3, 4}, rest}, master);
        CHECK(fronthaul_maduo(a, c, false) == 924);
        CHECK(fronthaul_maduo(a, c, true) == 784);
    }
    SECTION("masters only: nothing is exchanged")
    {
        const auto a = hand_assignment(3, 3, {{0}, {1}, {2}}, {0, 1, 2});
        CHECK(fronthaul_maduo(a, c, false) == 0);
        CHECK(fronthaul_maduo(a, c, true) == 0);
    }
    SECTION("baselines")
    {
        const auto a = hand_assignment(100, 3, {{0}, {1}, {2}}, {0, 1, 2});
        CHECK(fronthaul_baselines(a, c).centralized == 80000);
        CHECK(fronthaul(FronthaulScheme::distributed, a, c) == 3 * 190);
        auto empty = a;
        empty.mask = ApUeTable<char>(100, 3, 0);
        empty.served_ues.assign(100, {});
        CHECK(fronthaul_baselines(empty, c).distributed == 0);
    }
}

TEST_CASE("fronthaul equals the serialized message count", "[accounting]")
{
    for (std::uint64_t seed = 1; seed <= 4; ++seed)
    {
        NetworkConfig c = testing::desk_config(8, 2, 12, 3, seed);
        c.side_length = 600;
        c.tau_c = 50;
        const auto in = testing::make_instance(c, 0, 0);
        const auto &asg = in.asg();
        for (bool scl : {false, true})
        {
            Count wire = 0;
            for (std::size_t k = 0; k < c.num_ues; ++k)
                for (auto j : asg.asaps(k))
                {
                    const auto scope = scl ? EstimationScope::served_only : EstimationScope::all_ues;
                    const auto m = asap_message(scl ? in.est_served : in.est_all, asg, c, j, k, scope);
                    // tau_u soft estimates per block instead of the single one on the wire
                    wire += wire_scalar_count(serialize(m)) - 1 + c.tau_u();
                }
            CHECK(fronthaul_maduo(asg, c, scl) == wire);
        }
        CHECK(fronthaul_maduo(asg, c, true) <= fronthaul_maduo(asg, c, false));
    }
}

TEST_CASE("multiplication counting convention", "[accounting]")
{
    CHECK(cost::solve(1) == 1);
    CHECK(cost::gram(3, 4) == 30);
    CHECK(cost::message(40, 4) == 180);
    CHECK(cost::solve(2) == 6);
    CHECK(cost::solve(3) == 17);
    // MADUO's master solve with |A_k| = 10, N = 4 against a 40-antenna stack
    CHECK(cost::solve(13) < cost::solve(40));

    NetworkConfig c = testing::desk_config(1, 1, 1, 1);
    const auto a = hand_assignment(1, 1, {{0}}, {0});
    CHECK(mult_count(Scheme::maduo, a, c, 0) == 1 + c.tau_u());
    CHECK(mult_count(Scheme::maduo_scl, a, c, 0) == 1 + c.tau_u());
}

TEST_CASE("counts equal instrumented execution", "[accounting]")
{
    auto eng = substream(12, Stream::test);
    for (std::uint64_t seed = 1; seed <= 3; ++seed)
    {
        NetworkConfig c = testing::desk_config(6, 2, 9, 3, seed);
        c.side_length = 500;
        c.tau_c = 20;
        const auto in = testing::make_instance(c, 0, 0);
        for (auto scheme : all_schemes)
            for (std::size_t k = 0; k < c.num_ues; ++k)
            {
                CAPTURE(scheme_name(scheme), k);
                REQUIRE(instrumented_count(scheme, in, k, eng) == mult_count(scheme, in.asg(), c, k));
            }
        for (auto scheme : all_schemes)
        {
            const auto report = complexity_report(scheme, in.asg(), c);
            REQUIRE(report.per_ue_mults.size() == c.num_ues);
            double mean = 0;
            for (auto n : report.per_ue_mults)
                mean += static_cast<double>(n);
            CHECK(report.mean_mults == Catch::Approx(mean / c.num_ues));
        }
    }
}

TEST_CASE("scalable counts never exceed non-scalable counts", "[accounting]")
{
    for (std::size_t K : {10u, 40u})
    {
        NetworkConfig c;
        c.num_ues = K;
        const auto a = assign(generate_setup(c, 0).stats, c);
        for (std::size_t k = 0; k < K; ++k)
        {
            CHECK(mult_count(Scheme::maduo_scl, a, c, k) <= mult_count(Scheme::maduo, a, c, k));
            CHECK(mult_count(Scheme::lp_mmse, a, c, k) <= mult_count(Scheme::l_mmse, a, c, k));
            CHECK(mult_count(Scheme::p_mmse, a, c, k) <= mult_count(Scheme::c_mmse, a, c, k));
        }
        CHECK(fronthaul_maduo(a, c, true) <= fronthaul_maduo(a, c, false));
    }
}
