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
// Synthetic urban building-map generation: axis-aligned rectangular
// buildings with uniformly sampled footprints and heights, rejection-placed
// so that any two buildings keep a minimum street gap (Chebyshev cell
// separation), until a target occupied fraction is reached.

#pragma once

#include "chdet/chgrid.hpp"
#include "chdet/gridworld.hpp"
#include "chdet/rng.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace chdet
{

struct MapGenParams
{
    int side = 121;            // cells per edge
    double resolution_m = 4.0; // meters per cell
    double altitude_m = 2.0;   // occupancy evaluation altitude
    double target_fill = 0.3;  // fraction of cells occupied by buildings
    int min_buildings = 0;     // lower bound on building count
    int max_buildings = 10000; // upper bound on building count
    int footprint_min = 5;     // building edge, cells
    int footprint_max = 20;    // building edge, cells
    double height_min = 6.0;   // meters
    double height_max = 40.0;  // meters
    int min_street = 2;        // minimum gap between buildings, cells
    std::uint64_t seed = 0;
};

namespace detail
{

inline void validate(const MapGenParams &p)
{
    if (p.side < 1)
        throw std::invalid_argument("mapgen: side must be >= 1");
    if (!(p.resolution_m > 0.0))
        throw std::invalid_argument("mapgen: resolution_m must be positive");
    if (!(p.target_fill >= 0.0 && p.target_fill <= 0.6))
        throw std::invalid_argument("mapgen: target_fill must be in [0, 0.6]");
    if (p.footprint_min < 2 || p.footprint_max < p.footprint_min || p.footprint_max > p.side)
        throw std::invalid_argument("mapgen: footprint range must satisfy 2 <= min <= max <= side");
    if (!(p.height_min >= 0.0 && p.height_max <= 200.0 && p.height_min <= p.height_max))
        throw std::invalid_argument("mapgen: height range must be within [0, 200]");
    if (p.min_street < 0)
        throw std::invalid_argument("mapgen: min_street must be >= 0");
    if (p.min_buildings < 0 || p.max_buildings < p.min_buildings)
        throw std::invalid_argument("mapgen: building count range invalid");
}

} // namespace detail

inline BuildingMap generate_map(const MapGenParams &p)
{
    detail::validate(p);
    Rng rng = make_rng(p.seed);
    const int side = p.side;
    const std::size_t total = static_cast<std::size_t>(side) * side;
    std::vector<double> heights(total, 0.0);
    std::vector<std::uint8_t> footprint(total, 0);

    std::size_t filled = 0;
    int placed = 0;
    int consecutive_failures = 0;
    constexpr int kRetryBudget = 1000;

    auto target_met = [&] {
        return placed >= p.min_buildings &&
               static_cast<double>(filled) >= p.target_fill * static_cast<double>(total);
    };

    while (!target_met() && placed < p.max_buildings)
    {
        const int bh = static_cast<int>(uniform_int(rng, p.footprint_min, p.footprint_max));
        const int bw = static_cast<int>(uniform_int(rng, p.footprint_min, p.footprint_max));
        const int i0 = static_cast<int>(uniform_int(rng, 0, side - bh));
        const int j0 = static_cast<int>(uniform_int(rng, 0, side - bw));

        // the candidate footprint plus the street gap must be free of
        // existing footprints
        const int gi0 = std::max(0, i0 - p.min_street);
        const int gj0 = std::max(0, j0 - p.min_street);
        const int gi1 = std::min(side - 1, i0 + bh - 1 + p.min_street);
        const int gj1 = std::min(side - 1, j0 + bw - 1 + p.min_street);
        bool clear = true;
        for (int i = gi0; clear && i <= gi1; ++i)
            for (int j = gj0; j <= gj1; ++j)
                if (footprint[static_cast<std::size_t>(i) * side + j])
                {
                    clear = false;
                    break;
                }

        if (!clear)
        {
            if (++consecutive_failures >= kRetryBudget)
                throw std::runtime_error("mapgen: placement failed " + std::to_string(kRetryBudget) +
                                         " consecutive times before reaching target_fill; relax "
                                         "target_fill, footprint, or min_street");
            continue;
        }

        const double h = uniform_real(rng, p.height_min, p.height_max);
        for (int i = i0; i < i0 + bh; ++i)
            for (int j = j0; j < j0 + bw; ++j)
            {
                heights[static_cast<std::size_t>(i) * side + j] = h;
                footprint[static_cast<std::size_t>(i) * side + j] = 1;
            }
        filled += static_cast<std::size_t>(bh) * bw;
        ++placed;
        consecutive_failures = 0;
    }

    if (!target_met())
        throw std::runtime_error("mapgen: building count cap reached before target_fill");

    return BuildingMap(side, p.resolution_m, p.altitude_m, std::move(heights));
}

struct ManifestRow
{
    std::string file;
    double occupied_fraction = 0.0;
    std::uint64_t seed = 0;
};

inline double occupied_fraction(const BuildingMap &map)
{
    std::size_t n = 0;
    for (int i = 0; i < map.side(); ++i)
        for (int j = 0; j < map.side(); ++j)
            if (map.occupied({i, j}))
                ++n;
    return static_cast<double>(n) / (static_cast<double>(map.side()) * map.side());
}

inline std::vector<ManifestRow> generate_corpus(const MapGenParams &params, int n, const std::string &out_dir)
{
    if (n < 1)
        throw std::invalid_argument("generate_corpus: n must be >= 1");
    std::filesystem::create_directories(out_dir);

    std::vector<ManifestRow> manifest;
    manifest.reserve(static_cast<std::size_t>(n));
    for (int idx = 0; idx < n; ++idx)
    {
        MapGenParams per_map = params;
        per_map.seed = params.seed + static_cast<std::uint64_t>(idx);
        const BuildingMap map = generate_map(per_map);

        char name[32];
        std::snprintf(name, sizeof(name), "map_%04d.chgrid", idx);
        const std::string path = (std::filesystem::path(out_dir) / name).string();
        save_building_map(path, map);
        manifest.push_back({name, occupied_fraction(map), per_map.seed});
    }

    const std::string manifest_path = (std::filesystem::path(out_dir) / "manifest.csv").string();
    std::string text = "file,occupied_fraction,seed\n";
    for (const auto &row : manifest)
    {
        text += row.file;
        text += ',';
        detail::format_value(text, row.occupied_fraction);
        text += ',';
        text += std::to_string(row.seed);
        text += '\n';
    }
    std::ofstream out(manifest_path, std::ios::binary);
    if (!out)
        detail::grid_error(manifest_path, "cannot open for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out)
        detail::grid_error(manifest_path, "write failed");
    return manifest;
}

inline std::vector<ManifestRow> load_manifest(const std::string &manifest_path)
{
    std::ifstream in(manifest_path, std::ios::binary);
    if (!in)
        detail::grid_error(manifest_path, "cannot open for reading");
    std::string line;
    if (!std::getline(in, line) || line != "file,occupied_fraction,seed")
        detail::grid_error(manifest_path, "bad manifest header");
    std::vector<ManifestRow> rows;
    while (std::getline(in, line))
    {
        if (line.empty())
            continue;
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 == std::string::npos ? 0 : c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos)
            detail::grid_error(manifest_path, "bad manifest row: " + line);
        ManifestRow row;
        row.file = line.substr(0, c1);
        row.occupied_fraction = std::strtod(line.c_str() + c1 + 1, nullptr);
        row.seed = std::strtoull(line.c_str() + c2 + 1, nullptr, 10);
        rows.push_back(std::move(row));
    }
    if (rows.empty())
        detail::grid_error(manifest_path, "manifest has no rows");
    return rows;
}

} // namespace chdet
