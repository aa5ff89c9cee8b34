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

#include "cfmimo/core.hpp"

#include <array>
#include <string_view>

namespace cfmimo
{
    enum class Scheme
    {
        c_mmse,    // centralized, all-UE interference model
        p_mmse,    // centralized, partner-set interference model
        l_mmse,    // distributed L-MMSE + optimal LSFD
        lp_mmse,   // distributed LP-MMSE + nearly optimal LSFD
        maduo,     // master-assisted, all-UE CSI
        maduo_scl, // master-assisted, scalable
    };

    inline constexpr std::array<Scheme, 6> all_schemes{Scheme::c_mmse, Scheme::p_mmse, Scheme::l_mmse,
                                                       Scheme::lp_mmse, Scheme::maduo, Scheme::maduo_scl};

    constexpr std::string_view scheme_name(Scheme s)
    {
        switch (s)
        {
        case Scheme::c_mmse: return "c_mmse";
        case Scheme::p_mmse: return "p_mmse";
        case Scheme::l_mmse: return "l_mmse";
        case Scheme::lp_mmse: return "lp_mmse";
        case Scheme::maduo: return "maduo";
        case Scheme::maduo_scl: return "maduo_scl";
        }
        return "unknown";
    }

    inline Scheme parse_scheme(std::string_view name)
    {
        for (auto s : all_schemes)
            if (scheme_name(s) == name)
                return s;
        throw ConfigError("unknown scheme '" + std::string(name) + "'");
    }

    constexpr bool is_distributed(Scheme s) { return s == Scheme::l_mmse || s == Scheme::lp_mmse; }
}
