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
//
// Deterministic synthetic RSRP coverage maps: log-distance path loss plus a
// per-wall penetration penalty counted along the supercover segment from the
// base station. Cheap, reproducible, and by construction it produces shadow
// zones behind buildings. Also: coverage-hole extraction, finite-difference
// field gradients, and an exact Euclidean distance-to-building transform.

#pragma once

#include "chdet/chgrid.hpp"
#include "chdet/gridworld.hpp"
#include "chdet/rng.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

namespace chdet
{

struct BaseStation
{
    GridPoint cell{0, 0};
    double antenna_height_m = 2.0;
};

struct PropagationParams
{
    double p0_db = -40.0;           // RSRP at one cell of distance, no walls
    double pathloss_exponent = 2.0; // log-distance slope
    double wall_loss_db = 10.0;     // penalty per crossed occupied cell
    int max_wall_losses = 4;        // cap: total wall attenuation <= cap * wall_loss_db
    double wall_recovery_m = 8.0;   // clearance behind a wall at which its shadow halves
                                    // (taking this to infinity recovers a plain
                                    // capped wall-count model)
    std::optional<std::uint64_t> shadow_seed; // enables log-normal shadowing
    double shadow_sigma_db = 6.0;
};

class CoverageMap
{
  public:
    CoverageMap(int side, double resolution_m, std::vector<double> rsrp, BaseStation bs, double ch_threshold_db)
        : side_(side), resolution_m_(resolution_m), rsrp_(std::move(rsrp)), bs_(bs),
          ch_threshold_db_(ch_threshold_db)
    {
        if (side_ < 1 || rsrp_.size() != static_cast<std::size_t>(side_) * side_)
            throw std::invalid_argument("CoverageMap: rsrp size does not match side");
    }

    int side() const { return side_; }
    double resolution_m() const { return resolution_m_; }
    const BaseStation &bs() const { return bs_; }
    double ch_threshold_db() const { return ch_threshold_db_; }
    const std::vector<double> &rsrp() const { return rsrp_; }

    double at(GridPoint p) const { return rsrp_[static_cast<std::size_t>(p.i) * side_ + p.j]; }
    bool measurable(GridPoint p) const
    {
        return p.i >= 0 && p.i < side_ && p.j >= 0 && p.j < side_ && !std::isnan(at(p));
    }

  private:
    int side_;
    double resolution_m_;
    std::vector<double> rsrp_;
    BaseStation bs_;
    double ch_threshold_db_;
};

inline BaseStation place_base_station(const BuildingMap &map, std::uint64_t seed)
{
    Rng rng = make_rng(derive_seed(seed, 0x6273)); // "bs"
    const std::uint64_t total = static_cast<std::uint64_t>(map.side()) * map.side();
    const std::uint64_t idx = uniform_int(rng, 0, total - 1);
    const GridPoint cell{static_cast<int>(idx / map.side()), static_cast<int>(idx % map.side())};
    return {cell, map.height(cell) + 2.0};
}

// Number of distinct occupied cells the straight segment bs->q crosses,
// endpoints excluded: the antenna sits above its own rooftop and the target
// cell's own footprint never attenuates its measurement.
inline int wall_crossings(const BuildingMap &map, GridPoint bs, GridPoint q)
{
    if (bs == q)
        return 0;
    int walls = 0;
    for (const TraversalCell &t : supercover_cells(bs, q))
        if (!(t.cell == bs) && !(t.cell == q) && map.occupied(t.cell))
            ++walls;
    return walls;
}

// Total wall attenuation (dB) along bs->q. Each crossed occupied cell
// contributes wall_loss_db scaled by how much clearance the receiver has
// behind it: full loss within one cell of the wall, halving every
// wall_recovery_m of clearance beyond that. This mimics diffraction filling
// a shadow back in with distance behind the obstruction, and is what makes
// deep holes hug the lee walls of buildings instead of tiling whole shadow
// sectors. The cap keeps the total bounded by max_wall_losses full walls.
inline double wall_attenuation_db(const BuildingMap &map, GridPoint bs, GridPoint q,
                                  const PropagationParams &params)
{
    if (bs == q)
        return 0.0;
    double total = 0.0;
    const double res = map.resolution_m();
    for (const TraversalCell &t : supercover_cells(bs, q))
    {
        if (t.cell == bs || t.cell == q || !map.occupied(t.cell))
            continue;
        const double di = t.cell.i - q.i;
        const double dj = t.cell.j - q.j;
        const double clearance = std::max(0.0, std::sqrt(di * di + dj * dj) * res - res);
        total += params.wall_loss_db * std::exp2(-clearance / params.wall_recovery_m);
    }
    return std::min(total, params.wall_loss_db * params.max_wall_losses);
}

inline CoverageMap compute_coverage(const BuildingMap &map, const BaseStation &bs,
                                    const PropagationParams &params, double ch_threshold_db)
{
    if (!map.in_grid(bs.cell))
        throw std::invalid_argument("compute_coverage: base station outside grid");
    if (!(params.pathloss_exponent > 0.0) || params.wall_loss_db < 0.0 ||
        !(params.wall_recovery_m > 0.0))
        throw std::invalid_argument("compute_coverage: invalid propagation parameters");

    const int side = map.side();
    std::vector<double> rsrp(static_cast<std::size_t>(side) * side,
                             std::numeric_limits<double>::quiet_NaN());
    for (int i = 0; i < side; ++i)
        for (int j = 0; j < side; ++j)
        {
            const GridPoint q{i, j};
            if (map.occupied(q))
                continue;
            const double di = i - bs.cell.i;
            const double dj = j - bs.cell.j;
            const double d = std::max(1.0, std::sqrt(di * di + dj * dj));
            double z = params.p0_db - 10.0 * params.pathloss_exponent * std::log10(d) -
                       wall_attenuation_db(map, bs.cell, q, params);
            if (params.shadow_seed)
            {
                Rng cell_rng = make_rng(derive_seed(*params.shadow_seed, static_cast<std::uint64_t>(i),
                                                    static_cast<std::uint64_t>(j)));
                z += params.shadow_sigma_db * normal(cell_rng);
            }
            rsrp[static_cast<std::size_t>(i) * side + j] = z;
        }
    return CoverageMap(side, map.resolution_m(), std::move(rsrp), bs, ch_threshold_db);
}

// Coverage holes: unoccupied cells with RSRP strictly below the threshold.
inline PointSet ch_set(const CoverageMap &cm)
{
    PointSet out(cm.side());
    for (int i = 0; i < cm.side(); ++i)
        for (int j = 0; j < cm.side(); ++j)
        {
            const GridPoint p{i, j};
            if (cm.measurable(p) && cm.at(p) < cm.ch_threshold_db())
                out.insert(p);
        }
    return out;
}

// Finite-difference gradient of the RSRP field at p, in dB per cell:
// central where both neighbors carry measurements, one-sided at borders or
// next to sentinel cells, zero where no neighbor is measurable.
inline std::array<double, 2> cm_gradient(const CoverageMap &cm, GridPoint p)
{
    if (!cm.measurable(p))
        throw std::invalid_argument("cm_gradient: p is not a measurable cell");
    std::array<double, 2> g{0.0, 0.0};
    const auto axis = [&](int di, int dj) -> double {
        const GridPoint lo{p.i - di, p.j - dj};
        const GridPoint hi{p.i + di, p.j + dj};
        const bool has_lo = cm.measurable(lo);
        const bool has_hi = cm.measurable(hi);
        if (has_lo && has_hi)
            return (cm.at(hi) - cm.at(lo)) / 2.0;
        if (has_hi)
            return cm.at(hi) - cm.at(p);
        if (has_lo)
            return cm.at(p) - cm.at(lo);
        return 0.0;
    };
    g[0] = axis(1, 0);
    g[1] = axis(0, 1);
    return g;
}

namespace detail
{

// One-dimensional squared-distance transform (lower envelope of parabolas),
// the classic two-pass exact algorithm.
inline void edt_1d(const std::vector<double> &f, std::vector<double> &d, std::vector<int> &v,
                   std::vector<double> &z, int n)
{
    constexpr double kInf = std::numeric_limits<double>::infinity();
    int k = 0;
    v[0] = 0;
    z[0] = -kInf;
    z[1] = kInf;
    for (int q = 1; q < n; ++q)
    {
        if (f[q] == kInf)
            continue;
        if (f[v[0]] == kInf)
        {
            v[0] = q;
            continue;
        }
        double s = ((f[q] + q * static_cast<double>(q)) - (f[v[k]] + v[k] * static_cast<double>(v[k]))) /
                   (2.0 * q - 2.0 * v[k]);
        while (s <= z[k])
        {
            --k;
            s = ((f[q] + q * static_cast<double>(q)) - (f[v[k]] + v[k] * static_cast<double>(v[k]))) /
                (2.0 * q - 2.0 * v[k]);
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = kInf;
    }
    k = 0;
    for (int q = 0; q < n; ++q)
    {
        if (f[v[0]] == kInf)
        {
            d[q] = kInf;
            continue;
        }
        while (z[k + 1] < q)
            ++k;
        const double dq = q - static_cast<double>(v[k]);
        d[q] = dq * dq + f[v[k]];
    }
}

} // namespace detail

// Exact Euclidean distance (in meters) from every cell to the nearest
// occupied cell; zero on occupied cells, infinity when the map has none.
inline std::vector<double> distance_to_building(const BuildingMap &map)
{
    constexpr double kInf = std::numeric_limits<double>::infinity();
    const int side = map.side();
    std::vector<double> sq(static_cast<std::size_t>(side) * side);
    for (int i = 0; i < side; ++i)
        for (int j = 0; j < side; ++j)
            sq[static_cast<std::size_t>(i) * side + j] = map.occupied({i, j}) ? 0.0 : kInf;

    std::vector<double> f(side), d(side), z(side + 1);
    std::vector<int> v(side);
    // pass 1: along columns
    for (int j = 0; j < side; ++j)
    {
        for (int i = 0; i < side; ++i)
            f[i] = sq[static_cast<std::size_t>(i) * side + j];
        detail::edt_1d(f, d, v, z, side);
        for (int i = 0; i < side; ++i)
            sq[static_cast<std::size_t>(i) * side + j] = d[i];
    }
    // pass 2: along rows
    for (int i = 0; i < side; ++i)
    {
        for (int j = 0; j < side; ++j)
            f[j] = sq[static_cast<std::size_t>(i) * side + j];
        detail::edt_1d(f, d, v, z, side);
        for (int j = 0; j < side; ++j)
            sq[static_cast<std::size_t>(i) * side + j] = d[j];
    }

    for (auto &x : sq)
        x = std::isinf(x) ? kInf : std::sqrt(x) * map.resolution_m();
    return sq;
}

inline void save_coverage(const std::string &path, const CoverageMap &cm, double altitude_m)
{
    GridFile grid;
    grid.kind = "rsrp";
    grid.side = cm.side();
    grid.resolution_m = cm.resolution_m();
    grid.altitude_m = altitude_m;
    grid.values = cm.rsrp();
    save_grid(path, grid);
}

} // namespace chdet
