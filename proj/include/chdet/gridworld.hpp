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

#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <vector>

namespace chdet {

/// Grid geometry for a UAV moving on an L x L raster of building heights:
/// occupancy, line-of-sight blockage, movement windows, permissible sets,
/// and clamping of predicted waypoints onto unobstructed sub-segments.
///
/// Cell (i, j) is centered at integer coordinates (i, j) and spans the unit
/// square [i - 1/2, i + 1/2] x [j - 1/2, j + 1/2]. Indices are 0-based.

struct GridPoint
{
    int i = 0; // row
    int j = 0; // column

    friend bool operator==(const GridPoint &, const GridPoint &) = default;
    friend auto operator<=>(const GridPoint &, const GridPoint &) = default;
};

/// Building height raster. Immutable after construction; all grid operations
/// are pure functions of their inputs, so maps can be shared across threads.
class BuildingMap
{
  public:
    BuildingMap(int side, double resolution_m, double altitude_m, std::vector<double> heights)
        : side_(side), resolution_m_(resolution_m), altitude_m_(altitude_m), heights_(std::move(heights))
    {
        if (side <= 0)
            throw std::invalid_argument("BuildingMap: side must be positive");
        if (resolution_m <= 0.0)
            throw std::invalid_argument("BuildingMap: resolution must be positive");
        if (heights_.size() != static_cast<std::size_t>(side) * static_cast<std::size_t>(side))
            throw std::invalid_argument("BuildingMap: height raster size does not match side*side");
        for (const double h : heights_)
            if (!(h >= 0.0))
                throw std::invalid_argument("BuildingMap: building heights must be non-negative");
    }

    int side() const { return side_; }
    double resolution_m() const { return resolution_m_; }
    double altitude_m() const { return altitude_m_; }

    double height(int i, int j) const { return heights_[static_cast<std::size_t>(i) * side_ + j]; }
    double height(GridPoint p) const { return height(p.i, p.j); }
    const std::vector<double> &heights() const { return heights_; }

    bool in_grid(GridPoint p) const { return p.i >= 0 && p.i < side_ && p.j >= 0 && p.j < side_; }

    /// A cell blocks flight at the evaluation altitude iff its building
    /// reaches that altitude.
    bool occupied(GridPoint p) const { return height(p) >= altitude_m_; }

  private:
    int side_;
    double resolution_m_;
    double altitude_m_;
    std::vector<double> heights_;
};

/// Set of grid cells, stored as a dense membership mask.
class PointSet
{
  public:
    PointSet() = default;
    explicit PointSet(int side) : side_(side), mask_(static_cast<std::size_t>(side) * side, 0) {}

    int side() const { return side_; }
    int size() const { return count_; }
    bool empty() const { return count_ == 0; }

    bool contains(GridPoint p) const
    {
        if (p.i < 0 || p.i >= side_ || p.j < 0 || p.j >= side_)
            return false;
        return mask_[static_cast<std::size_t>(p.i) * side_ + p.j] != 0;
    }

    void insert(GridPoint p)
    {
        auto &m = mask_[static_cast<std::size_t>(p.i) * side_ + p.j];
        if (!m)
        {
            m = 1;
            ++count_;
        }
    }

    void erase(GridPoint p)
    {
        auto &m = mask_[static_cast<std::size_t>(p.i) * side_ + p.j];
        if (m)
        {
            m = 0;
            --count_;
        }
    }

    /// All members in row-major order.
    std::vector<GridPoint> points() const
    {
        std::vector<GridPoint> out;
        out.reserve(static_cast<std::size_t>(count_));
        for (int i = 0; i < side_; ++i)
            for (int j = 0; j < side_; ++j)
                if (mask_[static_cast<std::size_t>(i) * side_ + j])
                    out.push_back({i, j});
        return out;
    }

    friend bool operator==(const PointSet &a, const PointSet &b) = default;

  private:
    int side_ = 0;
    std::vector<std::uint8_t> mask_;
    int count_ = 0;
};

/// Cells occupied by buildings at the map's evaluation altitude.
inline PointSet occupied_set(const BuildingMap &map)
{
    PointSet out(map.side());
    for (int i = 0; i < map.side(); ++i)
        for (int j = 0; j < map.side(); ++j)
            if (map.occupied({i, j}))
                out.insert({i, j});
    return out;
}

/// One cell visited by a supercover traversal, together with the exact
/// segment parameter at which the segment leaves the cell (exit = num/den,
/// in [0, 1]). Cells touched only at a corner carry the corner parameter.
struct TraversalCell
{
    GridPoint cell;
    std::int64_t exit_num = 1;
    std::int64_t exit_den = 1;
};

/// Supercover traversal of the closed segment between the centers of a and
/// b: every cell whose closed unit square the segment touches, in order of
/// increasing segment parameter. When the segment passes exactly through a
/// grid corner, both laterally adjacent cells are included (they are touched
/// at that single point), so the visited set is symmetric in (a, b).
inline std::vector<TraversalCell> supercover_cells(GridPoint a, GridPoint b)
{
    const int dx = b.i - a.i, dy = b.j - a.j;
    const int si = dx > 0 ? 1 : -1, sj = dy > 0 ? 1 : -1;
    const std::int64_t nx = std::abs(dx), ny = std::abs(dy);

    // Boundary crossings along i happen at parameters (2k+1)/(2 nx); along j
    // at (2m+1)/(2 ny). They are merged exactly over the denominator
    // 2 * max(nx,1) * max(ny,1).
    const std::int64_t fx = nx > 0 ? nx : 1;
    const std::int64_t fy = ny > 0 ? ny : 1;
    const std::int64_t den = 2 * fx * fy;

    std::vector<TraversalCell> out;
    out.reserve(static_cast<std::size_t>(nx + ny + 2));

    int ci = a.i, cj = a.j;
    std::int64_t k = 0, m = 0;
    while (true)
    {
        const bool has_v = k < nx, has_h = m < ny;
        if (!has_v && !has_h)
        {
            out.push_back({{ci, cj}, den, den}); // final cell, exits at t = 1
            break;
        }
        const std::int64_t tv = has_v ? (2 * k + 1) * fy : INT64_MAX;
        const std::int64_t th = has_h ? (2 * m + 1) * fx : INT64_MAX;
        if (tv < th)
        {
            out.push_back({{ci, cj}, tv, den});
            ci += si;
            ++k;
        }
        else if (th < tv)
        {
            out.push_back({{ci, cj}, th, den});
            cj += sj;
            ++m;
        }
        else
        {
            // The segment passes exactly through a cell corner. The two cells
            // sharing that corner laterally are touched at the corner point.
            out.push_back({{ci, cj}, tv, den});
            out.push_back({{ci + si, cj}, tv, den});
            out.push_back({{ci, cj + sj}, tv, den});
            ci += si;
            cj += sj;
            ++k;
            ++m;
        }
    }
    return out;
}

/// True iff the straight flight path from a to b intersects a building cell.
/// The endpoint cells themselves never count as blockers. Symmetric in
/// (a, b) by the supercover guarantee.
inline bool line_blocked(const BuildingMap &map, GridPoint a, GridPoint b)
{
    if (a == b)
        return false;
    for (const TraversalCell &t : supercover_cells(a, b))
    {
        if (t.cell == a || t.cell == b)
            continue;
        if (map.occupied(t.cell))
            return true;
    }
    return false;
}

/// Cells reachable by displacement of at most l in each axis: the
/// (2l+1) x (2l+1) window around p intersected with the grid. Includes p.
inline PointSet allowed_window(GridPoint p, int step_limit, int side)
{
    if (step_limit < 1)
        throw std::invalid_argument("allowed_window: step limit must be >= 1");
    PointSet out(side);
    const int i0 = std::max(0, p.i - step_limit), i1 = std::min(side - 1, p.i + step_limit);
    const int j0 = std::max(0, p.j - step_limit), j1 = std::min(side - 1, p.j + step_limit);
    for (int i = i0; i <= i1; ++i)
        for (int j = j0; j <= j1; ++j)
            out.insert({i, j});
    return out;
}

/// Next-waypoint candidates from p: the movement window minus building cells
/// minus cells whose straight path from p crosses a building. p itself is
/// always a member (staying put is allowed).
inline PointSet permissible_set(const BuildingMap &map, GridPoint p, int step_limit)
{
    if (!map.in_grid(p))
        throw std::invalid_argument("permissible_set: point outside the grid");
    if (map.occupied(p))
        throw std::invalid_argument("permissible_set: current cell lies inside a building");
    PointSet out(map.side());
    const int side = map.side();
    const int i0 = std::max(0, p.i - step_limit), i1 = std::min(side - 1, p.i + step_limit);
    const int j0 = std::max(0, p.j - step_limit), j1 = std::min(side - 1, p.j + step_limit);
    for (int i = i0; i <= i1; ++i)
        for (int j = j0; j <= j1; ++j)
        {
            const GridPoint q{i, j};
            if (!map.occupied(q) && !line_blocked(map, p, q))
                out.insert(q);
        }
    return out;
}

/// Clamp a predicted waypoint onto the permissible part of its path, given a
/// precomputed permissible set for `from`. Of all cells the supercover
/// segment from->to visits, returns the permissible one the segment leaves
/// last (largest exit parameter; ties broken toward the larger (i, j) pair).
/// Returns `to` unchanged when it is permissible and `from` when no cell
/// forward of `from` is.
inline GridPoint clamp_to_path(GridPoint from, GridPoint to, const PointSet &permissible)
{
    if (from == to)
        return from;
    GridPoint best = from;
    std::int64_t bn = 0, bd = 1; // best exit parameter, as a fraction
    for (const TraversalCell &t : supercover_cells(from, to))
    {
        if (t.cell == from || !permissible.contains(t.cell))
            continue;
        // compare t.exit against best: exit_num/exit_den vs bn/bd
        const std::int64_t lhs = t.exit_num * bd, rhs = bn * t.exit_den;
        if (lhs > rhs || (lhs == rhs && t.cell > best))
        {
            best = t.cell;
            bn = t.exit_num;
            bd = t.exit_den;
        }
    }
    return best;
}

/// Same, computing the permissible set of `from` on the fly.
inline GridPoint clamp_to_path(const BuildingMap &map, GridPoint from, GridPoint to, int step_limit)
{
    return clamp_to_path(from, to, permissible_set(map, from, step_limit));
}

} // namespace chdet
