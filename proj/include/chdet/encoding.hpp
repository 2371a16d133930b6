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
// Observation encoding for the agent: a 3-plane full-map tensor (location
// gradient, accumulated measurement gradients, normalized building heights)
// plus a UAV-centered crop of the same planes, and the row-major geometry
// mapping action indices to movement offsets.

#pragma once

#include "chdet/gridworld.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

namespace chdet
{

struct Measurement
{
    GridPoint at;
    double rsrp_db = 0.0;

    friend bool operator==(const Measurement &, const Measurement &) = default;
};

using MeasurementLog = std::vector<Measurement>;

/// Full-map planes (3 x L x L) plus the UAV-centered crop (3 x (2l+1) x (2l+1)),
/// both row-major with the plane index slowest.
struct StateTensors
{
    int side = 0;
    int reach = 0; // l: crop half-width
    std::vector<float> full;
    std::vector<float> crop;

    int crop_side() const { return 2 * reach + 1; }
};

/// Radially symmetric decay 2^(-c * Euclidean distance), so equal distances
/// produce bit-equal values.
inline double location_kernel(int di, int dj, double c)
{
    return std::exp2(-c * std::sqrt(static_cast<double>(di) * di + static_cast<double>(dj) * dj));
}

inline std::vector<double> encode_location(GridPoint p, int side, double c)
{
    if (p.i < 0 || p.i >= side || p.j < 0 || p.j >= side)
        throw std::invalid_argument("encode_location: p outside grid");
    if (!(c > 0.0))
        throw std::invalid_argument("encode_location: c must be positive");
    std::vector<double> plane(static_cast<std::size_t>(side) * side);
    for (int i = 0; i < side; ++i)
        for (int j = 0; j < side; ++j)
            plane[static_cast<std::size_t>(i) * side + j] = location_kernel(i - p.i, j - p.j, c);
    return plane;
}

/// Maps the threshold to 0 and 0 dB to 1; values below the threshold go
/// negative.
inline double normalize_rsrp(double z_db, double eps_ch_db)
{
    return (z_db - eps_ch_db) / (-eps_ch_db);
}

inline std::vector<double> encode_measurements(const MeasurementLog &log, int side, double c, double eps_ch_db)
{
    std::vector<double> plane(static_cast<std::size_t>(side) * side, 0.0);
    for (const Measurement &m : log)
    {
        const double w = normalize_rsrp(m.rsrp_db, eps_ch_db);
        for (int i = 0; i < side; ++i)
            for (int j = 0; j < side; ++j)
                plane[static_cast<std::size_t>(i) * side + j] += w * location_kernel(i - m.at.i, j - m.at.j, c);
    }
    return plane;
}

constexpr double kHeightCeilingM = 100.0;

/// Action geometry: indices enumerate the (2l+1)^2 offsets row-major, so the
/// center index is the stay-put action.
inline std::pair<int, int> action_to_offset(int idx, int reach)
{
    const int w = 2 * reach + 1;
    if (idx < 0 || idx >= w * w)
        throw std::out_of_range("action_to_offset: index out of range");
    return {idx / w - reach, idx % w - reach};
}

inline int offset_to_action(int di, int dj, int reach)
{
    if (di < -reach || di > reach || dj < -reach || dj > reach)
        throw std::out_of_range("offset_to_action: offset out of range");
    const int w = 2 * reach + 1;
    return (di + reach) * w + (dj + reach);
}

/// Precomputed, map-bound state assembly. The location/measurement kernels
/// are read from one shared table indexed by |di|,|dj| (the same expression
/// as location_kernel, so values are bit-identical), and the static building
/// plane is encoded once per map.
class StateBuilder
{
  public:
    StateBuilder(const BuildingMap &map, int reach, double c, double eps_ch_db)
        : side_(map.side()), reach_(reach), c_(c), eps_ch_db_(eps_ch_db),
          kernel_(static_cast<std::size_t>(side_) * side_),
          heights_plane_(static_cast<std::size_t>(side_) * side_)
    {
        if (reach_ < 1)
            throw std::invalid_argument("StateBuilder: reach must be >= 1");
        if (!(eps_ch_db_ < 0.0))
            throw std::invalid_argument("StateBuilder: CH threshold must be negative");
        for (int di = 0; di < side_; ++di)
            for (int dj = 0; dj < side_; ++dj)
                kernel_[static_cast<std::size_t>(di) * side_ + dj] = location_kernel(di, dj, c_);
        for (int i = 0; i < side_; ++i)
            for (int j = 0; j < side_; ++j)
                heights_plane_[static_cast<std::size_t>(i) * side_ + j] = static_cast<float>(
                    std::min(map.height(i, j), kHeightCeilingM) / kHeightCeilingM);
    }

    int side() const { return side_; }
    int reach() const { return reach_; }
    double c() const { return c_; }
    double eps_ch_db() const { return eps_ch_db_; }

    /// Assemble the observation for an agent at p holding the given
    /// measurement log.
    StateTensors build(GridPoint p, const MeasurementLog &log) const
    {
        if (p.i < 0 || p.i >= side_ || p.j < 0 || p.j >= side_)
            throw std::invalid_argument("StateBuilder::build: p outside grid");
        const std::size_t plane_n = static_cast<std::size_t>(side_) * side_;
        StateTensors s;
        s.side = side_;
        s.reach = reach_;
        s.full.assign(3 * plane_n, 0.0f);

        float *loc = s.full.data();
        float *meas = s.full.data() + plane_n;
        float *bld = s.full.data() + 2 * plane_n;

        for (int i = 0; i < side_; ++i)
        {
            const std::size_t row = static_cast<std::size_t>(i) * side_;
            const std::size_t krow = static_cast<std::size_t>(std::abs(i - p.i)) * side_;
            for (int j = 0; j < side_; ++j)
                loc[row + j] = static_cast<float>(kernel_[krow + std::abs(j - p.j)]);
        }
        if (!log.empty())
        {
            std::vector<double> acc(plane_n, 0.0);
            for (const Measurement &m : log)
            {
                const double w = normalize_rsrp(m.rsrp_db, eps_ch_db_);
                for (int i = 0; i < side_; ++i)
                {
                    const std::size_t row = static_cast<std::size_t>(i) * side_;
                    const std::size_t krow = static_cast<std::size_t>(std::abs(i - m.at.i)) * side_;
                    for (int j = 0; j < side_; ++j)
                        acc[row + j] += w * kernel_[krow + std::abs(j - m.at.j)];
                }
            }
            for (std::size_t n = 0; n < plane_n; ++n)
                meas[n] = static_cast<float>(acc[n]);
        }
        std::copy(heights_plane_.begin(), heights_plane_.end(), bld);

        // UAV-centered crop of all three planes, zero-padded at borders
        const int w = 2 * reach_ + 1;
        s.crop.assign(static_cast<std::size_t>(3) * w * w, 0.0f);
        for (int plane = 0; plane < 3; ++plane)
        {
            const float *src = s.full.data() + static_cast<std::size_t>(plane) * plane_n;
            float *dst = s.crop.data() + static_cast<std::size_t>(plane) * w * w;
            for (int ci = 0; ci < w; ++ci)
            {
                const int i = p.i - reach_ + ci;
                if (i < 0 || i >= side_)
                    continue;
                for (int cj = 0; cj < w; ++cj)
                {
                    const int j = p.j - reach_ + cj;
                    if (j < 0 || j >= side_)
                        continue;
                    dst[static_cast<std::size_t>(ci) * w + cj] = src[static_cast<std::size_t>(i) * side_ + j];
                }
            }
        }
        return s;
    }

  private:
    int side_;
    int reach_;
    double c_;
    double eps_ch_db_;
    std::vector<double> kernel_;       // [|di|][|dj|] radial decay table
    std::vector<float> heights_plane_; // static normalized building plane
};

/// One-shot convenience wrapper over StateBuilder.
inline StateTensors build_state(const BuildingMap &map, GridPoint p, const MeasurementLog &log, int reach,
                                double c, double eps_ch_db)
{
    return StateBuilder(map, reach, c, eps_ch_db).build(p, log);
}

} // namespace chdet
