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

#include "chdet/ddqn.hpp"
#include "chdet/mapgen.hpp"
#include "chdet/propagation.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <vector>

using namespace chdet;

namespace
{

PointSet two_cell_set(int side, GridPoint a, GridPoint b)
{
    PointSet s(side);
    s.insert(a);
    s.insert(b);
    return s;
}

Tensor<float> random_input(std::vector<int> shape, Rng &rng)
{
    Tensor<float> t(std::move(shape));
    for (auto &v : t.values)
        v = static_cast<float>(uniform_real(rng, 0.0, 1.0));
    return t;
}

} // namespace

TEST_CASE("reward cases")
{
    const PointSet prm = two_cell_set(9, {1, 1}, {2, 2});

    // Reaching a hole: reward 0 regardless of how we got there.
    CHECK(reward({5, 5}, {1, 1}, prm, -110.0, -100.0) == 0.0);
    // Invalid proposal (inside a building / outside the set): -1.25.
    CHECK(reward({5, 5}, {1, 1}, prm, -80.0, -100.0) == -1.25);
    // Valid move that found nothing: -0.25.
    CHECK(reward({2, 2}, {2, 2}, prm, -80.0, -100.0) == -0.25);
    // Threshold is inclusive for the hole case.
    CHECK(reward({2, 2}, {2, 2}, prm, -100.0, -100.0) == 0.0);
    // An invalid proposal that got clamped onto a hole still earns 0.
    CHECK(reward({7, 7}, {1, 1}, prm, -130.0, -100.0) == 0.0);
    // Off-grid proposals are invalid.
    CHECK(reward({-3, 0}, {1, 1}, prm, -80.0, -100.0) == -1.25);
}

TEST_CASE("greedy argmax uses row-major first-wins ties")
{
    const std::vector<float> q1 = {0.0f, 3.0f, 3.0f, -1.0f};
    CHECK(argmax_row_major(q1.data(), 4) == 1);
    const std::vector<float> q2 = {2.0f, 2.0f, 2.0f};
    CHECK(argmax_row_major(q2.data(), 3) == 0);

    // Invariance under a strictly increasing transform.
    std::vector<float> q3 = {-1.5f, 0.25f, 0.2f, -3.0f, 0.24f};
    const int before = argmax_row_major(q3.data(), 5);
    for (auto &v : q3)
        v = 2.0f * v + 7.0f;
    CHECK(argmax_row_major(q3.data(), 5) == before);
}

TEST_CASE("exploration draws uniformly over all actions")
{
    QNetwork<float> net(15, 3);
    std::vector<double> heights(121 * 121, 0.0);
    BuildingMap map(121, 4.0, 2.0, std::move(heights));
    StateBuilder builder(map, 15, 0.1, -100.0);
    const StateTensors state = builder.build({60, 60}, {{{60, 60}, -70.0}});

    Rng rng = make_rng(77);
    const int draws = 100000;
    std::vector<int> counts(961, 0);
    for (int i = 0; i < draws; ++i)
        counts[static_cast<std::size_t>(select_action(net, state, {60, 60}, 1.0, rng))]++;
    const double expected = draws / 961.0;
    double chi2 = 0.0;
    for (int c : counts)
        chi2 += (c - expected) * (c - expected) / expected;
    // df = 960: mean 960, sd ~44; 1200 is beyond +5 sd.
    CHECK(chi2 < 1200.0);
}

TEST_CASE("greedy selection matches the network argmax")
{
    const int reach = 2;
    QNetwork<float> net(reach, 8);
    std::vector<double> heights(15 * 15, 0.0);
    BuildingMap map(15, 4.0, 2.0, std::move(heights));
    StateBuilder builder(map, reach, 0.1, -100.0);
    const StateTensors state = builder.build({7, 7}, {{{7, 7}, -70.0}});

    Tensor<float> xa, xb;
    pack_states<float>({&state}, xa, xb);
    const Tensor<float> q = net.forward(xa, xb, {{7, 7}});
    const int expected = argmax_row_major(q.data(), net.n_actions());

    Rng rng = make_rng(5);
    for (int i = 0; i < 5; ++i)
        CHECK(select_action(net, state, {7, 7}, 0.0, rng) == expected);
}

TEST_CASE("target computation bootstraps only non-terminal transitions")
{
    const int reach = 2;
    QNetwork<float> policy(reach, 11), target(reach, 22);
    Rng rng = make_rng(60);
    auto xa = random_input({3, 3, 15, 15}, rng);
    auto xb = random_input({3, 3, 5, 5}, rng);
    const std::vector<GridPoint> pos = {{0, 0}, {7, 7}, {14, 14}};
    const std::vector<float> r = {-0.25f, 0.0f, -1.25f};

    SECTION("terminal rows are exactly r")
    {
        const auto y = ddqn_targets(policy, target, xa, xb, pos, r, {1, 1, 1}, 0.99);
        CHECK(y == std::vector<double>{-0.25, 0.0, -1.25});
    }
    SECTION("zero discount reduces to r")
    {
        const auto y = ddqn_targets(policy, target, xa, xb, pos, r, {0, 0, 0}, 0.0);
        CHECK(y == std::vector<double>{-0.25, 0.0, -1.25});
    }
    SECTION("with synchronized weights the double estimator collapses to the single one")
    {
        copy_weights(policy, target);
        const auto y_ddqn = ddqn_targets(policy, target, xa, xb, pos, r, {0, 1, 0}, 0.99);
        const auto y_dqn = dqn_targets(target, xa, xb, pos, r, {0, 1, 0}, 0.99);
        REQUIRE(y_ddqn.size() == y_dqn.size());
        for (std::size_t i = 0; i < y_ddqn.size(); ++i)
            CHECK(y_ddqn[i] == y_dqn[i]); // bit-exact
    }
    SECTION("bootstrap uses the target net's value at the policy net's argmax")
    {
        const auto y = ddqn_targets(policy, target, xa, xb, pos, r, {0, 0, 0}, 0.5);
        const auto qp = policy.forward(xa, xb, pos);
        const auto qt = target.forward(xa, xb, pos);
        for (std::size_t s = 0; s < 3; ++s)
        {
            const int a = argmax_row_major(qp.data() + s * 25, 25);
            const double expect =
                static_cast<double>(r[s]) + 0.5 * static_cast<double>(qt.values[s * 25 + a]);
            CHECK(y[s] == expect);
        }
    }
}

TEST_CASE("loss value and gradient routing")
{
    SECTION("perfect prediction with zero reward gives zero loss")
    {
        Tensor<float> q({2, 4});
        q.values = {1.0f, 2.0f, 3.0f, 4.0f, -1.0f, 0.0f, 0.5f, 2.5f};
        Tensor<float> dq;
        const double loss =
            ddqn_loss_grad(q, {3, 0}, {4.0, -1.0}, {0.0f, 0.0f}, 1.0, dq);
        CHECK(loss == 0.0);
        for (float g : dq.values)
            CHECK(g == 0.0f);
    }
    SECTION("single-sample hand value")
    {
        Tensor<float> q({1, 3});
        q.values = {0.0f, 5.0f, -2.0f};
        Tensor<float> dq;
        const double loss = ddqn_loss_grad(q, {0}, {1.0}, {-0.25f}, 1.0, dq);
        CHECK(loss == Catch::Approx(1.0625).margin(1e-12));
        CHECK(dq.values[0] == -2.0f); // 2 (Q - y) / N
        CHECK(dq.values[1] == 0.0f);
        CHECK(dq.values[2] == 0.0f);
    }
    SECTION("regularizer vanishes at alpha zero")
    {
        Tensor<float> q({1, 2});
        q.values = {0.5f, 0.0f};
        Tensor<float> dq;
        const double with = ddqn_loss_grad(q, {0}, {0.0}, {-1.25f}, 1.0, dq);
        const double without = ddqn_loss_grad(q, {0}, {0.0}, {-1.25f}, 0.0, dq);
        CHECK(with == Catch::Approx(0.25 + 1.5625).margin(1e-12));
        CHECK(without == Catch::Approx(0.25).margin(1e-12));
    }
}

TEST_CASE("replay buffer is a uniform ring")
{
    ReplayBuffer buf(1000);
    const MeasurementLog dummy = {{{0, 0}, -70.0}, {{0, 1}, -71.0}};
    for (int i = 0; i < 1000; ++i)
        buf.push({i, dummy, 0, 0.0f, false});
    REQUIRE(buf.size() == 1000);

    Rng rng = make_rng(90);
    const int draws = 100000;
    std::vector<int> counts(1000, 0);
    for (int d = 0; d < draws; ++d)
        for (std::size_t idx : buf.sample(rng, 1))
            counts[static_cast<std::size_t>(buf[idx].map_index)]++;
    // Per-item count ~ Binomial(100k, 1/1000): mean 100, sd ~10; 5 sd band.
    for (int c : counts)
    {
        CHECK(c > 50);
        CHECK(c < 150);
    }

    SECTION("overwrites oldest entries at capacity")
    {
        ReplayBuffer small(3);
        for (int i = 0; i < 5; ++i)
            small.push({i, dummy, 0, 0.0f, false});
        REQUIRE(small.size() == 3);
        // Ring order after 5 pushes into capacity 3: slots hold 3, 4, 2.
        std::vector<int> seen;
        for (std::size_t i = 0; i < 3; ++i)
            seen.push_back(small[i].map_index);
        CHECK(seen == std::vector<int>{3, 4, 2});
    }
    SECTION("rejects malformed transitions and undersized sampling")
    {
        ReplayBuffer tiny(2);
        CHECK_THROWS_AS(tiny.push({0, {{{0, 0}, -70.0}}, 0, 0.0f, false}),
                        std::invalid_argument);
        Rng r2 = make_rng(1);
        CHECK_THROWS_AS(tiny.sample(r2, 1), std::logic_error);
    }
}

namespace
{

struct TinyWorld
{
    std::vector<BuildingMap> maps;
    std::vector<CoverageMap> cms;
};

TinyWorld make_tiny_world(std::uint64_t seed)
{
    TinyWorld w;
    for (int m = 0; m < 2; ++m)
    {
        MapGenParams params;
        params.side = 21;
        params.target_fill = 0.25;
        params.footprint_min = 3;
        params.footprint_max = 6;
        params.min_street = 1;
        params.seed = seed + static_cast<std::uint64_t>(m);
        BuildingMap map = generate_map(params);
        const BaseStation bs = place_base_station(map, params.seed);
        PropagationParams prop;
        w.cms.push_back(compute_coverage(map, bs, prop, -100.0));
        w.maps.push_back(std::move(map));
    }
    return w;
}

AgentConfig tiny_agent()
{
    AgentConfig cfg;
    cfg.reach = 3;
    cfg.batch_size = 4;
    cfg.replay_capacity = 64;
    cfg.epsilon_decay_steps = 100;
    cfg.max_episode_steps = 5;
    cfg.target_sync_period = 8;
    return cfg;
}

} // namespace

TEST_CASE("training is deterministic in the seed")
{
    TinyWorld w = make_tiny_world(500);

    std::vector<EpisodeRow> log1, log2, log3;
    DdqnTrainer t1(&w.maps, &w.cms, tiny_agent(), 42);
    t1.run(6, &log1);
    DdqnTrainer t2(&w.maps, &w.cms, tiny_agent(), 42);
    t2.run(6, &log2);
    DdqnTrainer t3(&w.maps, &w.cms, tiny_agent(), 43);
    t3.run(6, &log3);

    REQUIRE(log1.size() == 6);
    REQUIRE(log2.size() == 6);
    for (std::size_t i = 0; i < log1.size(); ++i)
    {
        CHECK(log1[i].steps == log2[i].steps);
        CHECK(log1[i].episode_return == log2[i].episode_return);
        CHECK(log1[i].found_ch == log2[i].found_ch);
        CHECK(log1[i].epsilon == log2[i].epsilon);
        const bool both_nan =
            std::isnan(log1[i].loss_mean) && std::isnan(log2[i].loss_mean);
        CHECK((both_nan || log1[i].loss_mean == log2[i].loss_mean));
    }

    bool any_diff = false;
    for (std::size_t i = 0; i < log1.size() && i < log3.size(); ++i)
        any_diff = any_diff || log1[i].steps != log3[i].steps ||
                   log1[i].episode_return != log3[i].episode_return;
    CHECK(any_diff);

    // Weights after identical runs coincide bit-exactly.
    auto p1 = t1.policy().params();
    auto p2 = t2.policy().params();
    for (std::size_t i = 0; i < p1.size(); ++i)
        CHECK(*p1[i].value == *p2[i].value);
}

TEST_CASE("episode bookkeeping stays within the contract")
{
    TinyWorld w = make_tiny_world(640);
    DdqnTrainer trainer(&w.maps, &w.cms, tiny_agent(), 7);
    std::vector<EpisodeRow> log;
    trainer.run(8, &log);

    const AgentConfig &cfg = trainer.config();
    for (const EpisodeRow &row : log)
    {
        CHECK(row.steps >= 1);
        CHECK(row.steps <= cfg.max_episode_steps);
        CHECK(row.episode_return <= 0.0);
        CHECK(row.episode_return >= -1.25 * cfg.max_episode_steps);
        CHECK(row.epsilon <= cfg.epsilon_start);
        CHECK(row.epsilon >= cfg.epsilon_end);
    }
    CHECK(trainer.episodes_done() == 8);
    CHECK(trainer.env_steps() >= 8);
    CHECK(trainer.grad_steps() >= 1);

    // Every stored reward is one of the three legal values.
    for (std::size_t i = 0; i < trainer.buffer().size(); ++i)
    {
        const float r = trainer.buffer()[i].reward;
        CHECK((r == 0.0f || r == -0.25f || r == -1.25f));
        CHECK(trainer.buffer()[i].path.size() >= 2);
    }
}

TEST_CASE("zero episodes leave the initial weights untouched")
{
    TinyWorld w = make_tiny_world(700);
    AgentConfig cfg = tiny_agent();
    DdqnTrainer trainer(&w.maps, &w.cms, cfg, 99);
    trainer.run(0, nullptr);

    QNetwork<float> fresh(cfg.reach, derive_seed(99, 10));
    auto got = trainer.policy().params();
    auto want = fresh.params();
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i)
        CHECK(*got[i].value == *want[i].value);
}

TEST_CASE("greedy rollout predictor mirrors the network argmax")
{
    TinyWorld w = make_tiny_world(820);
    AgentConfig cfg = tiny_agent();
    DdqnTrainer trainer(&w.maps, &w.cms, cfg, 3);

    const BuildingMap &map = w.maps[0];
    GridPoint p{10, 10};
    while (map.occupied(p)) // slide to the nearest free cell on the row
        p.j = (p.j + 1) % map.side();
    const MeasurementLog log = {{p, w.cms[0].at(p)}};

    DdqnPredictor predictor(&trainer.policy(), &trainer.builder(0));
    const GridPoint predicted = predictor.predict(map, nullptr, p, log);

    const StateTensors state = trainer.builder(0).build(p, log);
    Tensor<float> xa, xb;
    pack_states<float>({&state}, xa, xb);
    const Tensor<float> q = trainer.policy().forward(xa, xb, {p});
    const auto [di, dj] =
        action_to_offset(argmax_row_major(q.data(), q.shape[1]), cfg.reach);
    CHECK(predicted == GridPoint{p.i + di, p.j + dj});
    CHECK_FALSE(predictor.needs_full_coverage());
}
