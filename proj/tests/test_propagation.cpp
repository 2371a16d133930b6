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

#include <catch2/catch_amalgamated.hpp>

#include "chdet/mapgen.hpp"
#include "chdet/propagation.hpp"
#include "chdet/rng.hpp"

#include <cmath>
#include <limits>

using namespace chdet;

namespace {

BuildingMap empty_map(int side)
{
    return BuildingMap(side, 4.0, 2.0, std::vector<double>(static_cast<std::size_t>(side) * side, 0.0));
}

BuildingMap map_with(int side, const std::vector<GridPoint> &blocks, double h = 10.0)
{
    std::vector<double> heights(static_cast<std::size_t>(side) * side, 0.0);
    for (const auto &p : blocks)
        heights[static_cast<std::size_t>(p.i) * side + p.j] = h;
    return BuildingMap(side, 4.0, 2.0, std::move(heights));
}

} // namespace

TEST_CASE("place_base_station is deterministic and altitude-aware", "[propagation]")
{
    SECTION("1x1 map picks the only cell")
    {
        auto map = empty_map(1);
        CHECK(place_base_station(map, 5).cell == GridPoint{0, 0});
        CHECK(place_base_station(map, 5).antenna_height_m == 2.0);
    }
    SECTION("same seed, same cell")
    {
        auto map = empty_map(31);
        CHECK(place_base_station(map, 7).cell == place_base_station(map, 7).cell);
    }
    SECTION("rooftop placement adds 2 m above the building")
    {
        // every cell is a 10 m building, so wherever the BS lands the
        // antenna sits at 12 m
        BuildingMap map(5, 4.0, 2.0, std::vector<double>(25, 10.0));
        CHECK(place_base_station(map, 3).antenna_height_m == 12.0);
    }
}

TEST_CASE("coverage formula spot values", "[propagation]")
{
    PropagationParams params;
    params.pathloss_exponent = 3.0;
    params.wall_loss_db = 15.0;
    SECTION("adjacent cell, no walls")
    {
        auto map = empty_map(21);
        auto cm = compute_coverage(map, {{10, 10}, 2.0}, params, -100.0);
        CHECK(cm.at({10, 11}) == Catch::Approx(-40.0).margin(1e-12));
    }
    SECTION("ten cells out, no walls")
    {
        auto map = empty_map(21);
        auto cm = compute_coverage(map, {{10, 0}, 2.0}, params, -100.0);
        CHECK(cm.at({10, 10}) == Catch::Approx(-70.0).margin(1e-12));
    }
    SECTION("one wall right behind the receiver adds the full penetration loss")
    {
        auto map = map_with(21, {{10, 9}});
        auto cm = compute_coverage(map, {{10, 0}, 2.0}, params, -100.0);
        // zero clearance behind the wall: the full 15 dB applies
        CHECK(cm.at({10, 10}) == Catch::Approx(-85.0).margin(1e-12));
    }
    SECTION("shadow heals with clearance behind the wall")
    {
        auto map = map_with(41, {{10, 9}});
        auto cm = compute_coverage(map, {{10, 0}, 2.0}, params, -100.0);
        // 11 cells past the wall (40 m clearance at 4 m/cell, recovery 8 m):
        // residual wall loss is 15 * 2^(-40/8)
        const double expected = -40.0 - 30.0 * std::log10(20.0) - 15.0 * std::exp2(-40.0 / 8.0);
        CHECK(cm.at({10, 20}) == Catch::Approx(expected).margin(1e-12));
        // and the same receiver distance with no wall is strictly stronger
        auto open = compute_coverage(empty_map(41), {{10, 0}, 2.0}, params, -100.0);
        CHECK(open.at({10, 20}) > cm.at({10, 20}));
    }
    SECTION("total wall attenuation is capped")
    {
        // recovery -> huge reproduces the plain capped wall-count model
        PropagationParams flat = params;
        flat.wall_recovery_m = 1e12;
        auto map = map_with(21, {{10, 2}, {10, 4}, {10, 6}, {10, 8}, {10, 10}, {10, 12}});
        auto cm = compute_coverage(map, {{10, 0}, 2.0}, flat, -100.0);
        // six walls on the segment but only max_wall_losses=4 count
        const double expected = -40.0 - 30.0 * std::log10(14.0) - 15.0 * 4;
        CHECK(cm.at({10, 14}) == Catch::Approx(expected).margin(1e-9));
    }
    SECTION("occupied cells carry the sentinel")
    {
        auto map = map_with(21, {{3, 3}});
        auto cm = compute_coverage(map, {{10, 0}, 2.0}, params, -100.0);
        CHECK(std::isnan(cm.at({3, 3})));
        CHECK_FALSE(cm.measurable({3, 3}));
    }
}

TEST_CASE("RSRP decays monotonically along wall-free rays", "[propagation]")
{
    auto map = empty_map(61);
    auto cm = compute_coverage(map, {{30, 30}, 2.0}, PropagationParams{}, -100.0);
    // walk straight rays in 8 directions
    const int dirs[8][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {1, -1}, {-1, 1}, {-1, -1}};
    for (const auto &d : dirs)
    {
        double prev = std::numeric_limits<double>::infinity();
        for (int s = 1; s <= 30; ++s)
        {
            const GridPoint q{30 + s * d[0], 30 + s * d[1]};
            const double z = cm.at(q);
            CHECK(z <= prev + 1e-12);
            prev = z;
        }
    }
}

TEST_CASE("shadowing is deterministic per seed and off by default", "[propagation]")
{
    auto map = empty_map(21);
    PropagationParams with;
    with.shadow_seed = 99;
    auto cm1 = compute_coverage(map, {{10, 10}, 2.0}, with, -100.0);
    auto cm2 = compute_coverage(map, {{10, 10}, 2.0}, with, -100.0);
    CHECK(cm1.rsrp() == cm2.rsrp());

    PropagationParams without;
    auto cm3 = compute_coverage(map, {{10, 10}, 2.0}, without, -100.0);
    CHECK(cm3.rsrp() != cm1.rsrp());
}

TEST_CASE("ch_set applies a strict threshold to unoccupied cells", "[propagation]")
{
    auto map = map_with(9, {{4, 4}});
    const int side = 9;
    std::vector<double> rsrp(81, -50.0);
    rsrp[1 * side + 1] = -101.0;              // below: in
    rsrp[2 * side + 2] = -100.0;              // exactly at threshold: out (strict <)
    rsrp[4 * side + 4] = std::nan("");        // occupied sentinel: out
    CoverageMap cm(side, 4.0, rsrp, {{0, 0}, 2.0}, -100.0);

    auto holes = ch_set(cm);
    REQUIRE(holes.size() == 1);
    CHECK(holes.contains({1, 1}));
    CHECK_FALSE(holes.contains({2, 2}));

    // brute-force scan agrees
    std::size_t brute = 0;
    for (int i = 0; i < side; ++i)
        for (int j = 0; j < side; ++j)
            if (!std::isnan(rsrp[static_cast<std::size_t>(i) * side + j]) &&
                rsrp[static_cast<std::size_t>(i) * side + j] < -100.0)
                ++brute;
    CHECK(holes.size() == brute);
}

TEST_CASE("cm_gradient stencils", "[propagation]")
{
    const int side = 9;
    SECTION("linear ramp along i")
    {
        std::vector<double> rsrp(81);
        for (int i = 0; i < side; ++i)
            for (int j = 0; j < side; ++j)
                rsrp[static_cast<std::size_t>(i) * side + j] = static_cast<double>(i);
        CoverageMap cm(side, 4.0, rsrp, {{0, 0}, 2.0}, -100.0);
        const auto g = cm_gradient(cm, {4, 4});
        CHECK(g[0] == 1.0);
        CHECK(g[1] == 0.0);
        // border cells fall back to one-sided stencils with the same slope
        const auto gb = cm_gradient(cm, {0, 4});
        CHECK(gb[0] == 1.0);
        CHECK(gb[1] == 0.0);
    }
    SECTION("constant field has zero gradient")
    {
        std::vector<double> rsrp(81, -60.0);
        CoverageMap cm(side, 4.0, rsrp, {{0, 0}, 2.0}, -100.0);
        const auto g = cm_gradient(cm, {4, 4});
        CHECK(g[0] == 0.0);
        CHECK(g[1] == 0.0);
    }
    SECTION("sentinel neighbors force one-sided or zero stencils")
    {
        std::vector<double> rsrp(81);
        for (int i = 0; i < side; ++i)
            for (int j = 0; j < side; ++j)
                rsrp[static_cast<std::size_t>(i) * side + j] = static_cast<double>(2 * i + j);
        // both i-neighbors of (4,4) unmeasurable -> zero i-component
        rsrp[3 * side + 4] = std::nan("");
        rsrp[5 * side + 4] = std::nan("");
        // one j-neighbor unmeasurable -> one-sided j stencil
        rsrp[4 * side + 3] = std::nan("");
        CoverageMap cm(side, 4.0, rsrp, {{0, 0}, 2.0}, -100.0);
        const auto g = cm_gradient(cm, {4, 4});
        CHECK(g[0] == 0.0);
        CHECK(g[1] == 1.0);
    }
    SECTION("matches an independent random-field oracle")
    {
        Rng rng = make_rng(31);
        std::vector<double> rsrp(81);
        for (auto &z : rsrp)
            z = uniform_real(rng, -120.0, -40.0);
        CoverageMap cm(side, 4.0, rsrp, {{0, 0}, 2.0}, -100.0);
        auto value = [&](int i, int j) { return rsrp[static_cast<std::size_t>(i) * side + j]; };
        for (int i = 0; i < side; ++i)
            for (int j = 0; j < side; ++j)
            {
                const auto g = cm_gradient(cm, {i, j});
                double gi;
                if (i > 0 && i < side - 1)
                    gi = (value(i + 1, j) - value(i - 1, j)) / 2.0;
                else if (i == 0)
                    gi = value(1, j) - value(0, j);
                else
                    gi = value(i, j) - value(i - 1, j);
                double gj;
                if (j > 0 && j < side - 1)
                    gj = (value(i, j + 1) - value(i, j - 1)) / 2.0;
                else if (j == 0)
                    gj = value(i, 1) - value(i, 0);
                else
                    gj = value(i, j) - value(i, j - 1);
                CHECK(std::abs(g[0] - gi) < 1e-12);
                CHECK(std::abs(g[1] - gj) < 1e-12);
            }
    }
}

TEST_CASE("distance_to_building is exact Euclidean", "[propagation]")
{
    SECTION("spot values")
    {
        auto map = map_with(9, {{4, 4}});
        const auto dist = distance_to_building(map);
        const int side = 9;
        CHECK(dist[4 * side + 4] == 0.0);
        CHECK(dist[4 * side + 5] == Catch::Approx(4.0));
        CHECK(dist[5 * side + 5] == Catch::Approx(4.0 * std::sqrt(2.0)));
        CHECK(dist[4 * side + 8] == Catch::Approx(16.0));
    }
    SECTION("no buildings yields infinity")
    {
        auto map = empty_map(5);
        for (double d : distance_to_building(map))
            CHECK(std::isinf(d));
    }
    SECTION("matches brute force on random maps")
    {
        Rng rng = make_rng(77);
        for (int trial = 0; trial < 10; ++trial)
        {
            const int side = 30;
            std::vector<double> heights(static_cast<std::size_t>(side) * side, 0.0);
            for (auto &h : heights)
                if (uniform_unit(rng) < 0.1)
                    h = 10.0;
            BuildingMap map(side, 4.0, 2.0, std::move(heights));
            const auto fast = distance_to_building(map);
            for (int i = 0; i < side; ++i)
                for (int j = 0; j < side; ++j)
                {
                    double best = std::numeric_limits<double>::infinity();
                    for (int a = 0; a < side; ++a)
                        for (int b = 0; b < side; ++b)
                            if (map.occupied({a, b}))
                            {
                                const double di = i - a, dj = j - b;
                                best = std::min(best, std::sqrt(di * di + dj * dj) * 4.0);
                            }
                    const double got = fast[static_cast<std::size_t>(i) * side + j];
                    if (std::isinf(best))
                        CHECK(std::isinf(got));
                    else
                        CHECK(got == Catch::Approx(best).margin(1e-9));
                }
        }
    }
}

TEST_CASE("coverage holes cluster near buildings across a corpus", "[propagation][corpus]")
{
    // the qualitative geography the detection task depends on: the CH
    // fraction within 8 m of a building exceeds the all-cells fraction
    MapGenParams params; // side 121, fill 0.3
    params.seed = 1000;
    double ch_near = 0.0, all_near = 0.0;
    int maps_counted = 0;
    for (int m = 0; m < 50; ++m)
    {
        MapGenParams per_map = params;
        per_map.seed = params.seed + static_cast<std::uint64_t>(m);
        const BuildingMap map = generate_map(per_map);
        const BaseStation bs = place_base_station(map, derive_seed(2000, static_cast<std::uint64_t>(m)));
        const CoverageMap cm = compute_coverage(map, bs, PropagationParams{}, -100.0);
        const PointSet holes = ch_set(cm);
        if (holes.size() == 0)
            continue;
        const auto dist = distance_to_building(map);

        std::size_t ch_n = 0, ch_k = 0, all_n = 0, all_k = 0;
        for (int i = 0; i < map.side(); ++i)
            for (int j = 0; j < map.side(); ++j)
            {
                if (map.occupied({i, j}))
                    continue;
                const bool near = dist[static_cast<std::size_t>(i) * map.side() + j] <= 8.0;
                ++all_n;
                all_k += near;
                if (holes.contains({i, j}))
                {
                    ++ch_n;
                    ch_k += near;
                }
            }
        ch_near += static_cast<double>(ch_k) / static_cast<double>(ch_n);
        all_near += static_cast<double>(all_k) / static_cast<double>(all_n);
        ++maps_counted;
    }
    REQUIRE(maps_counted >= 40); // nearly every generated map should have holes
    ch_near /= maps_counted;
    all_near /= maps_counted;
    INFO("mean CH fraction near buildings " << ch_near << " vs all-cells " << all_near);
    CHECK(ch_near > all_near);
}
