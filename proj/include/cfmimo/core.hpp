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

#include <complex>
#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cfmimo
{
    using cd = std::complex<double>;
    using CVec = Eigen::VectorXcd;
    using CMat = Eigen::MatrixXcd;
    using RMat = Eigen::MatrixXd;

    // ----- Error hierarchy ---------------------------------------------------
    // Every failure surfaced by the library derives from cfmimo::Error. The CLI
    // maps the subclasses onto exit codes.

    class Error : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    class ConfigError : public Error
    {
    public:
        using Error::Error;
    };

    class StatisticsError : public Error
    {
    public:
        using Error::Error;
    };

    /// A quantity outside the caller's estimation or message scope was requested.
    class LookupError : public Error
    {
    public:
        using Error::Error;
    };

    class ProtocolError : public Error
    {
    public:
        using Error::Error;
    };

    class NumericalError : public Error
    {
    public:
        using Error::Error;
    };

    class DomainError : public Error
    {
    public:
        using Error::Error;
    };

    class IoError : public Error
    {
    public:
        using Error::Error;
    };

    // ----- Dense (AP, UE) table ---------------------------------------------

    template <typename T>
    class ApUeTable
    {
    public:
        ApUeTable() = default;
        ApUeTable(std::size_t num_aps, std::size_t num_ues, const T &init = T{})
            : aps_(num_aps), ues_(num_ues), data_(num_aps * num_ues, init) {}

        std::size_t num_aps() const { return aps_; }
        std::size_t num_ues() const { return ues_; }

        T &operator()(std::size_t j, std::size_t k) { return data_[j * ues_ + k]; }
        const T &operator()(std::size_t j, std::size_t k) const { return data_[j * ues_ + k]; }

        bool operator==(const ApUeTable &) const = default;

    private:
        std::size_t aps_ = 0;
        std::size_t ues_ = 0;
        std::vector<T> data_;
    };

    // ----- Deterministic random substreams -----------------------------------

    /// SplitMix64 finalizer; used to derive independent stream seeds.
    constexpr std::uint64_t splitmix64(std::uint64_t x)
    {
        x += 0x9E3779B97F4A7C15ULL;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
        return x ^ (x >> 31);
    }

    /// Stream purposes. Each (seed, purpose, a, b) tuple names one generator.
    enum class Stream : std::uint64_t
    {
        geometry = 1,
        shadowing = 2,
        channel = 3,
        pilot_noise = 4,
        data = 5,
        test = 99,
    };

    inline std::mt19937_64 substream(std::uint64_t seed, Stream purpose, std::uint64_t a = 0, std::uint64_t b = 0)
    {
        std::uint64_t s = splitmix64(seed);
        s = splitmix64(s ^ static_cast<std::uint64_t>(purpose));
        s = splitmix64(s ^ a);
        s = splitmix64(s ^ (b + 0x632BE59BD9B4E019ULL));
        return std::mt19937_64(s);
    }

    /// Circularly-symmetric complex Gaussian with unit variance.
    template <typename Engine>
    cd complex_normal(Engine &eng)
    {
        std::normal_distribution<double> nd(0.0, 1.0);
        const double re = nd(eng);
        const double im = nd(eng);
        return cd(re, im) * std::sqrt(0.5);
    }

    template <typename Engine>
    CVec complex_normal_vector(Engine &eng, Eigen::Index n)
    {
        CVec w(n);
        for (Eigen::Index i = 0; i < n; ++i)
            w(i) = complex_normal(eng);
        return w;
    }

    // ----- Small linear algebra helpers --------------------------------------

    /// Solves A x = b for Hermitian positive definite A via Cholesky.
    /// Throws NumericalError when the factorization fails.
    template <typename Rhs>
    auto hermitian_solve(const CMat &A, const Rhs &b, const char *what = "hermitian system")
    {
        Eigen::LLT<CMat> llt(A);
        if (llt.info() != Eigen::Success)
            throw NumericalError(std::string("Cholesky factorization failed: ") + what);
        return typename Rhs::PlainObject(llt.solve(b));
    }

    /// Principal square root of a Hermitian PSD matrix; tiny negative
    /// eigenvalues from round-off are clamped to zero.
    inline CMat psd_sqrt(const CMat &R)
    {
        if (R.rows() == 0)
            return R;
        Eigen::SelfAdjointEigenSolver<CMat> es(R);
        if (es.info() != Eigen::Success)
            throw StatisticsError("eigendecomposition of correlation matrix failed");
        const auto &ev = es.eigenvalues();
        const double scale = std::max(ev.cwiseAbs().maxCoeff(), 0.0);
        Eigen::VectorXd s(ev.size());
        for (Eigen::Index i = 0; i < ev.size(); ++i)
        {
            if (ev(i) < -1e-10 * scale * static_cast<double>(ev.size()))
                throw StatisticsError("correlation matrix is indefinite");
            s(i) = std::sqrt(std::max(ev(i), 0.0));
        }
        return es.eigenvectors() * s.asDiagonal() * es.eigenvectors().adjoint();
    }

    inline double relative_frobenius(const CMat &estimate, const CMat &reference)
    {
        return (estimate - reference).norm() / reference.norm();
    }
}
