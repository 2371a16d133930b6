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
// Trajectory executor: runs any next-waypoint predictor from a start cell
// for a bounded number of steps, enforcing the movement rules and
// recording what was measured along the way.

#pragma once

#include "encoding.hpp"
#include "gridworld.hpp"
#include "propagation.hpp"

#include <stdexcept>
#include <vector>

namespace chdet
{

/// Next-waypoint predictor. Concrete predictors declare up front whether
/// they are allowed to read the full coverage map (gradient oracles) or
/// only the measurements collected so far (the learned agent); the
/// executor passes the map pointer only to the former, which makes the
/// information asymmetry between the two families auditable.
class Predictor
{
  public:
    virtual ~Predictor() = default;

    virtual bool needs_full_coverage() const = 0;

    /// Propose the next waypoint from cell `p`. `cm` is non-null only for
    /// predictors that declared full-coverage access; `log` holds every
    /// measurement taken so far on this trajectory, newest last. The
    /// proposal may be unreachable or off-grid — the executor clamps it.
    virtual GridPoint predict(const BuildingMap &map, const CoverageMap *cm, GridPoint p,
                              const MeasurementLog &log) = 0;
};

struct Trajectory
{
    std::vector<GridPoint> waypoints; // starts with the start cell
    MeasurementLog measurements;      // one entry per waypoint
    int steps_taken = 0;
    bool found_ch = false;
    GridPoint final_prediction{};
};

/// Fly one trajectory: measure at the start, then up to `step_budget`
/// times propose / clamp / move / measure, stopping early once a
/// measurement at or below the coverage map's hole threshold is seen.
/// The final prediction is the last waypoint reached.
inline Trajectory rollout(const BuildingMap &map, const CoverageMap &cm, Predictor &predictor,
                          GridPoint start, int step_budget, int step_limit)
{
    if (!map.in_grid(start))
        throw std::invalid_argument("rollout: start outside the grid");
    if (map.occupied(start))
        throw std::invalid_argument("rollout: start lies inside a building");
    if (step_budget < 0)
        throw std::invalid_argument("rollout: negative step budget");

    const double eps = cm.ch_threshold_db();
    const CoverageMap *cm_for_predictor = predictor.needs_full_coverage() ? &cm : nullptr;

    Trajectory out;
    GridPoint p = start;
    out.waypoints.push_back(p);
    out.measurements.push_back({p, cm.at(p)});

    for (int i = 1; i <= step_budget; ++i)
    {
        if (out.measurements.back().rsrp_db <= eps)
            break;
        const GridPoint proposal = predictor.predict(map, cm_for_predictor, p, out.measurements);
        p = clamp_to_path(map, p, proposal, step_limit);
        out.waypoints.push_back(p);
        out.measurements.push_back({p, cm.at(p)});
    }

    for (const Measurement &m : out.measurements)
        out.found_ch = out.found_ch || m.rsrp_db <= eps;
    out.steps_taken = static_cast<int>(out.waypoints.size()) - 1;
    out.final_prediction = out.waypoints.back();
    return out;
}

} // namespace chdet
