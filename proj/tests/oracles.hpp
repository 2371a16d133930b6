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

// Test-only reference implementations, deliberately written with different
// algorithms than the library so they can serve as independent oracles.
// Geometry works on exact integer arithmetic in doubled coordinates; the
// library's traversal code is never called from here.

#include "chdet/gridworld.hpp"

#include <algorithm>
#include <cstdint>
#include <optional>
#include <vector>

namespace chdet::oracle {

// Exact fraction a/b with b > 0, for segment parameters.
struct Frac
{
    std::int64_t num = 0;
    std::int64_t den = 1;
    friend bool operator<(const Frac &a, const Frac &b) { return a.num * b.den < b.num * a.den; }
    friend bool operator==(const Frac &a, const Frac &b) { return a.num * b.den == b.num * a.den; }
    friend bool operator<=(const Frac &a, const Frac &b) { return !(b < a); }
};

// Intersection of the segment parameter interval [0,1] with the closed cell
// square of c, computed by exact slab clipping in doubled coordinates.
// Returns the (entry, exit) parameters, or nothing when the segment misses
// the square. Segment runs from center of a to center of b.
inline std::optional<std::pair<Frac, Frac>> segment_cell_interval(GridPoint a, GridPoint b, GridPoint c)
{
    // Doubled coordinates: centers at even integers, cell walls at odd ones.
    const std::int64_t px = 2 * a.i, py = 2 * a.j;
    const std::int64_t dx = 2 * (b.i - a.i), dy = 2 * (b.j - a.j);
    // Closed square of c: [2c.i-1, 2c.i+1] x [2c.j-1, 2c.j+1].
    std::int64_t lo_num = 0, lo_den = 1;  // running max of lower bounds
    std::int64_t hi_num = 1, hi_den = 1;  // running min of upper bounds

    auto clip_axis = [&](std::int64_t p, std::int64_t d, std::int64_t wlo, std::int64_t whi) -> bool {
        if (d == 0)
            return p >= wlo && p <= whi;
        // (wlo - p)/d <= t <= (whi - p)/d, orientation depending on sign of d
        std::int64_t n0 = wlo - p, n1 = whi - p;
        if (d < 0)
            std::swap(n0, n1);
        const std::int64_t ad = std::abs(d);
        // lower bound max
        if (n0 * (d < 0 ? -1 : 1) * lo_den > lo_num * ad)
        {
            lo_num = n0 * (d < 0 ? -1 : 1);
            lo_den = ad;
        }
        if (n1 * (d < 0 ? -1 : 1) * hi_den < hi_num * ad)
        {
            hi_num = n1 * (d < 0 ? -1 : 1);
            hi_den = ad;
        }
        return true;
    };

    if (!clip_axis(px, dx, 2 * c.i - 1, 2 * c.i + 1))
        return std::nullopt;
    if (!clip_axis(py, dy, 2 * c.j - 1, 2 * c.j + 1))
        return std::nullopt;
    // clamp to [0,1]
    if (lo_num * 1 < 0 * lo_den)
    {
        lo_num = 0;
        lo_den = 1;
    }
    if (hi_num * 1 > 1 * hi_den)
    {
        hi_num = 1;
        hi_den = 1;
    }
    const Frac lo{lo_num, lo_den}, hi{hi_num, hi_den};
    if (hi < lo)
        return std::nullopt;
    return std::make_pair(lo, hi);
}

inline bool segment_touches_cell(GridPoint a, GridPoint b, GridPoint c)
{
    return segment_cell_interval(a, b, c).has_value();
}

// All cells whose closed square the closed segment touches, by scanning the
// bounding box, in row-major order.
inline std::vector<GridPoint> touched_cells(GridPoint a, GridPoint b)
{
    std::vector<GridPoint> out;
    const int i0 = std::min(a.i, b.i), i1 = std::max(a.i, b.i);
    const int j0 = std::min(a.j, b.j), j1 = std::max(a.j, b.j);
    for (int i = i0 - 1; i <= i1 + 1; ++i)
        for (int j = j0 - 1; j <= j1 + 1; ++j)
            if (segment_touches_cell(a, b, {i, j}))
                out.push_back({i, j});
    return out;
}

inline bool line_blocked(const BuildingMap &map, GridPoint a, GridPoint b)
{
    for (const GridPoint &c : touched_cells(a, b))
        if (!(c == a) && !(c == b) && map.in_grid(c) && map.occupied(c))
            return true;
    return false;
}

// Eq-by-eq re-derivation of the permissible set: window, minus occupied,
// minus blocked, via the slab-clipping blockage test above.
inline std::vector<GridPoint> permissible_points(const BuildingMap &map, GridPoint p, int l)
{
    std::vector<GridPoint> out;
    for (int i = std::max(0, p.i - l); i <= std::min(map.side() - 1, p.i + l); ++i)
        for (int j = std::max(0, p.j - l); j <= std::min(map.side() - 1, p.j + l); ++j)
        {
            const GridPoint q{i, j};
            if (!map.occupied(q) && !oracle::line_blocked(map, p, q))
                out.push_back(q);
        }
    return out;
}

// Reference waypoint clamping: among permissible touched cells, the one the
// segment leaves last (exit parameter from exact slab clipping, ties toward
// the larger (i, j) pair); `from` when none qualifies.
inline GridPoint clamp_to_path(const BuildingMap &map, GridPoint from, GridPoint to, int l)
{
    if (from == to)
        return from;
    const std::vector<GridPoint> permissible = permissible_points(map, from, l);
    auto is_permissible = [&](GridPoint q) {
        return std::find(permissible.begin(), permissible.end(), q) != permissible.end();
    };
    GridPoint best = from;
    Frac best_exit{0, 1};
    const int i0 = std::min(from.i, to.i), i1 = std::max(from.i, to.i);
    const int j0 = std::min(from.j, to.j), j1 = std::max(from.j, to.j);
    for (int i = i0 - 1; i <= i1 + 1; ++i)
        for (int j = j0 - 1; j <= j1 + 1; ++j)
        {
            const GridPoint c{i, j};
            if (c == from || !is_permissible(c))
                continue;
            const auto interval = segment_cell_interval(from, to, c);
            if (!interval)
                continue;
            const Frac exit = interval->second;
            if (best_exit < exit || (best_exit == exit && best < c))
            {
                best = c;
                best_exit = exit;
            }
        }
    return best;
}

} // namespace chdet::oracle
