// SPDX-License-Identifier: Apache-2.0
//
// chdet - coverage hole detection workbench for urban cellular networks
// Copyright (C) 2026 chdet contributors
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

#include <cmath>
#include <cstdint>
#include <random>

namespace chdet {

/// Deterministic sampling helpers on top of std::mt19937_64.
///
/// The standard distributions are implementation-defined, so every sampled
/// value in this project goes through the functions below. Results are then
/// reproducible from the seed alone, independent of the standard library.

using Rng = std::mt19937_64;

// splitmix64; used to derive independent sub-streams from one seed.
inline std::uint64_t mix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0)
{
    return mix64(mix64(mix64(seed ^ mix64(a)) ^ mix64(b)) ^ mix64(c));
}

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform_unit(Rng &rng) { return static_cast<double>(rng() >> 11) * 0x1p-53; }

inline double uniform_real(Rng &rng, double lo, double hi) { return lo + (hi - lo) * uniform_unit(rng); }

/// Uniform integer in [lo, hi], inclusive. Unbiased (rejection sampling).
inline std::int64_t uniform_int(Rng &rng, std::int64_t lo, std::int64_t hi)
{
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1ULL;
    if (span == 0) // full 64-bit range
        return static_cast<std::int64_t>(rng());
    const std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % span;
    std::uint64_t x = rng();
    while (x >= limit)
        x = rng();
    return lo + static_cast<std::int64_t>(x % span);
}

/// Standard normal via Box-Muller (no cached spare, two draws per call).
inline double normal(Rng &rng)
{
    double u1 = uniform_unit(rng);
    while (u1 <= 0.0)
        u1 = uniform_unit(rng);
    const double u2 = uniform_unit(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

/// In-place Fisher-Yates shuffle.
template <typename T, typename Alloc, template <typename, typename> class Vec>
inline void shuffle(Vec<T, Alloc> &v, Rng &rng)
{
    for (std::size_t i = v.size(); i > 1; --i)
    {
        const std::size_t j = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(i) - 1));
        std::swap(v[i - 1], v[j]);
    }
}

} // namespace chdet
