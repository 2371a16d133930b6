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
// CHGRID/1: a tiny text raster format for square grids.
//
//   line 1   CHGRID 1
//   line 2   kind=<heights|rsrp>
//   line 3   L=<int> resolution_m=<float> altitude_m=<float>
//   then     L lines of L whitespace-separated decimal values, row-major
//
// Values are written with shortest round-trip formatting, so a
// save -> load -> save cycle is byte-identical. "nan" marks cells with no
// measurement (rsrp rasters only).

#pragma once

#include "chdet/gridworld.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace chdet
{

struct GridFile
{
    std::string kind; // "heights" or "rsrp"
    int side = 0;
    double resolution_m = 0.0;
    double altitude_m = 0.0;
    std::vector<double> values; // row-major, side*side entries

    double at(int i, int j) const { return values[static_cast<std::size_t>(i) * side + j]; }
};

namespace detail
{

inline void format_value(std::string &out, double v)
{
    if (std::isnan(v))
    {
        out += "nan";
        return;
    }
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
}

[[noreturn]] inline void grid_error(const std::string &path, const std::string &what)
{
    throw std::runtime_error(path + ": " + what);
}

inline double parse_header_number(const std::string &path, std::string_view line, std::string_view key)
{
    const auto pos = line.find(key);
    if (pos == std::string_view::npos)
        grid_error(path, "missing '" + std::string(key) + "' in header");
    const char *begin = line.data() + pos + key.size();
    char *end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin)
        grid_error(path, "unparsable value for '" + std::string(key) + "'");
    return v;
}

} // namespace detail

inline void save_grid(const std::string &path, const GridFile &grid)
{
    if (grid.kind != "heights" && grid.kind != "rsrp")
        throw std::invalid_argument("save_grid: kind must be 'heights' or 'rsrp'");
    if (grid.side < 1 || grid.values.size() != static_cast<std::size_t>(grid.side) * grid.side)
        throw std::invalid_argument("save_grid: value count does not match side");

    std::string out;
    out.reserve(grid.values.size() * 8 + 128);
    out += "CHGRID 1\n";
    out += "kind=" + grid.kind + "\n";
    out += "L=" + std::to_string(grid.side) + " resolution_m=";
    detail::format_value(out, grid.resolution_m);
    out += " altitude_m=";
    detail::format_value(out, grid.altitude_m);
    out += "\n";
    for (int i = 0; i < grid.side; ++i)
    {
        for (int j = 0; j < grid.side; ++j)
        {
            if (j > 0)
                out += ' ';
            detail::format_value(out, grid.at(i, j));
        }
        out += '\n';
    }

    std::ofstream file(path, std::ios::binary);
    if (!file)
        detail::grid_error(path, "cannot open for writing");
    file.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!file)
        detail::grid_error(path, "write failed");
}

inline GridFile load_grid(const std::string &path)
{
    std::ifstream file(path, std::ios::binary);
    if (!file)
        detail::grid_error(path, "cannot open for reading");
    std::ostringstream buf;
    buf << file.rdbuf();
    const std::string text = buf.str();

    std::istringstream lines(text);
    std::string line;
    if (!std::getline(lines, line) || line != "CHGRID 1")
        detail::grid_error(path, "not a CHGRID 1 file");
    if (!std::getline(lines, line) || line.rfind("kind=", 0) != 0)
        detail::grid_error(path, "missing kind header");

    GridFile grid;
    grid.kind = line.substr(5);
    if (grid.kind != "heights" && grid.kind != "rsrp")
        detail::grid_error(path, "unknown kind '" + grid.kind + "'");

    if (!std::getline(lines, line))
        detail::grid_error(path, "missing dimension header");
    const double side_v = detail::parse_header_number(path, line, "L=");
    grid.side = static_cast<int>(side_v);
    if (grid.side < 1 || static_cast<double>(grid.side) != side_v)
        detail::grid_error(path, "invalid L");
    grid.resolution_m = detail::parse_header_number(path, line, "resolution_m=");
    grid.altitude_m = detail::parse_header_number(path, line, "altitude_m=");
    if (!(grid.resolution_m > 0.0))
        detail::grid_error(path, "resolution_m must be positive");

    const std::size_t expected = static_cast<std::size_t>(grid.side) * grid.side;
    grid.values.reserve(expected);
    const auto data_pos = lines.tellg();
    const char *cursor = data_pos < 0 ? text.data() + text.size() : text.data() + data_pos;
    const char *stop = text.data() + text.size();
    while (cursor < stop)
    {
        while (cursor < stop && (*cursor == ' ' || *cursor == '\n' || *cursor == '\r' || *cursor == '\t'))
            ++cursor;
        if (cursor >= stop)
            break;
        char *end = nullptr;
        const double v = std::strtod(cursor, &end);
        if (end == cursor)
            detail::grid_error(path, "unparsable data value");
        grid.values.push_back(v);
        cursor = end;
    }
    if (grid.values.size() != expected)
        detail::grid_error(path, "expected " + std::to_string(expected) + " values, found " +
                                     std::to_string(grid.values.size()));
    for (const double v : grid.values)
    {
        if (grid.kind == "heights" && !(std::isfinite(v) && v >= 0.0))
            detail::grid_error(path, "heights must be finite and non-negative");
        if (grid.kind == "rsrp" && !std::isfinite(v) && !std::isnan(v))
            detail::grid_error(path, "rsrp values must be finite or nan");
    }
    return grid;
}

inline void save_building_map(const std::string &path, const BuildingMap &map)
{
    GridFile grid;
    grid.kind = "heights";
    grid.side = map.side();
    grid.resolution_m = map.resolution_m();
    grid.altitude_m = map.altitude_m();
    grid.values = map.heights();
    save_grid(path, grid);
}

inline BuildingMap load_building_map(const std::string &path)
{
    GridFile grid = load_grid(path);
    if (grid.kind != "heights")
        detail::grid_error(path, "expected kind=heights, found kind=" + grid.kind);
    return BuildingMap(grid.side, grid.resolution_m, grid.altitude_m, std::move(grid.values));
}

} // namespace chdet
