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
// The four non-learned predictors: uniform random sampling, sampling
// restricted to the near-building neighborhood, and the two gradient
// walkers that read the full coverage map as an oracle.

#pragma once

#include "gridworld.hpp"
#include "propagation.hpp"
#include "rng.hpp"
#include "rollout.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

namespace chdet
{

struct BnpConfig
{
    double neighborhood_m = 8.0; // max distance from building walls
};

/// All cells outside buildings, row-major.
inline std::vector<GridPoint> unoccupied_cells(const BuildingMap &map)
{
    std::vector<GridPoint> out;
    for (int i = 0; i < map.side(); ++i)
        for (int j = 0; j < map.side(); ++j)
            if (!map.occupied({i, j}))
                out.push_back({i, j});
    return out;
}

/// The near-building neighborhood: unoccupied cells whose distance to the
/// closest building cell is at most `cfg.neighborhood_m`. Row-major list
/// plus a membership mask for O(1) queries.
struct Neighborhood
{
    std::vector<GridPoint> cells;
    PointSet members;
};

inline Neighborhood make_neighborhood(const BuildingMap &map, const BnpConfig &cfg)
{
    if (cfg.neighborhood_m <= 0.0)
        throw std::invalid_argument("make_neighborhood: distance must be positive");
    const std::vector<double> dist = distance_to_building(map);
    Neighborhood out;
    out.members = PointSet(map.side());
    bool any_building = false;
    for (int i = 0; i < map.side() && !any_building; ++i)
        for (int j = 0; j < map.side() && !any_building; ++j)
            any_building = map.occupied({i, j});
    if (!any_building)
        throw std::invalid_argument("make_neighborhood: map has no buildings");
    for (int i = 0; i < map.side(); ++i)
        for (int j = 0; j < map.side(); ++j)
        {
            const GridPoint p{i, j};
            if (map.occupied(p))
                continue;
            if (dist[static_cast<std::size_t>(i) * map.side() + j] <= cfg.neighborhood_m)
            {
                out.cells.push_back(p);
                out.members.insert(p);
            }
        }
    if (out.cells.empty())
        throw std::invalid_argument("make_neighborhood: neighborhood is empty");
    return out;
}

/// Uniform sample over all unoccupied cells.
inline GridPoint rsp_sample(const BuildingMap &map, Rng &rng)
{
    const std::vector<GridPoint> cells = unoccupied_cells(map);
    if (cells.empty())
        throw std::invalid_argument("rsp_sample: map has no unoccupied cells");
    return cells[static_cast<std::size_t>(
        uniform_int(rng, 0, static_cast<std::int64_t>(cells.size()) - 1))];
}

/// Uniform sample over the near-building neighborhood.
inline GridPoint bnp_sample(const Neighborhood &nbh, Rng &rng)
{
    return nbh.cells[static_cast<std::size_t>(
        uniform_int(rng, 0, static_cast<std::int64_t>(nbh.cells.size()) - 1))];
}

inline GridPoint bnp_sample(const BuildingMap &map, const BnpConfig &cfg, Rng &rng)
{
    return bnp_sample(make_neighborhood(map, cfg), rng);
}

/// One gradient-descent step on the coverage map: candidate = p minus the
/// rounded gradient, each displacement component clamped to the movement
/// envelope [-step_limit, step_limit]. A zero gradient is a fixed point.
/// The returned candidate may be unreachable; the trajectory executor's
/// clamping enforces permissibility.
inline GridPoint grsp_step(const CoverageMap &cm, GridPoint p, int step_limit)
{
    const std::array<double, 2> g = cm_gradient(cm, p);
    const auto clamp_disp = [step_limit](double grad_component) {
        long d = -std::lround(grad_component);
        d = std::max<long>(-step_limit, std::min<long>(step_limit, d));
        return static_cast<int>(d);
    };
    return {p.i + clamp_disp(g[0]), p.j + clamp_disp(g[1])};
}

/// Gradient step that must stay near buildings: when the raw candidate
/// leaves the neighborhood, it is replaced by the neighborhood cell
/// nearest to the candidate (Euclidean; row-major tie-break).
inline GridPoint gbnp_step(const CoverageMap &cm, GridPoint p, const Neighborhood &nbh,
                           int step_limit)
{
    const GridPoint candidate = grsp_step(cm, p, step_limit);
    if (nbh.members.contains(candidate))
        return candidate;
    GridPoint best = nbh.cells.front();
    double best_d2 = std::numeric_limits<double>::infinity();
    for (const GridPoint &q : nbh.cells)
    {
        const double di = static_cast<double>(q.i - candidate.i);
        const double dj = static_cast<double>(q.j - candidate.j);
        const double d2 = di * di + dj * dj;
        if (d2 < best_d2) // strict: earlier (row-major) cell wins ties
        {
            best_d2 = d2;
            best = q;
        }
    }
    return best;
}

inline GridPoint gbnp_step(const BuildingMap &map, const CoverageMap &cm, GridPoint p,
                           const BnpConfig &cfg, int step_limit)
{
    return gbnp_step(cm, p, make_neighborhood(map, cfg), step_limit);
}

/// Predictor that never moves: models the one-shot samplers, whose start
/// point *is* their prediction, inside the common trajectory executor.
class StayPutPredictor final : public Predictor
{
  public:
    bool needs_full_coverage() const override { return false; }
    GridPoint predict(const BuildingMap &, const CoverageMap *, GridPoint p,
                      const MeasurementLog &) override
    {
        return p;
    }
};

/// Gradient walker with full coverage-map access.
class GrspPredictor final : public Predictor
{
  public:
    explicit GrspPredictor(int step_limit) : step_limit_(step_limit) {}
    bool needs_full_coverage() const override { return true; }
    GridPoint predict(const BuildingMap &, const CoverageMap *cm, GridPoint p,
                      const MeasurementLog &) override
    {
        if (cm == nullptr)
            throw std::logic_error("GrspPredictor: executor withheld the coverage map");
        return grsp_step(*cm, p, step_limit_);
    }

  private:
    int step_limit_;
};

/// Gradient walker confined to the near-building neighborhood.
class GbnpPredictor final : public Predictor
{
  public:
    GbnpPredictor(const Neighborhood *nbh, int step_limit)
        : nbh_(nbh), step_limit_(step_limit)
    {
        if (nbh == nullptr)
            throw std::invalid_argument("GbnpPredictor: null neighborhood");
    }
    bool needs_full_coverage() const override { return true; }
    GridPoint predict(const BuildingMap &, const CoverageMap *cm, GridPoint p,
                      const MeasurementLog &) override
    {
        if (cm == nullptr)
            throw std::logic_error("GbnpPredictor: executor withheld the coverage map");
        return gbnp_step(*cm, p, *nbh_, step_limit_);
    }

  private:
    const Neighborhood *nbh_;
    int step_limit_;
};

} // namespace chdet
