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
// The reinforcement-learning agent: reward shaping, epsilon-greedy action
// selection, double-estimator targets, replay memory and the training
// loop. Replay entries store the measurement path rather than the encoded
// state planes; states are rebuilt on sampling, which keeps a full buffer
// in the tens of megabytes instead of tens of gigabytes.

#pragma once

#include "encoding.hpp"
#include "gridworld.hpp"
#include "nn.hpp"
#include "propagation.hpp"
#include "rng.hpp"
#include "rollout.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace chdet
{

struct AgentConfig
{
    int reach = 15;                         // movement / window radius (cells)
    double kernel_scale = 0.1;              // location-kernel decay constant
    double gamma = 0.99;                    // discount factor
    double alpha = 1.0;                     // weight of the r^2 loss term
    double ch_threshold_db = -100.0;        // coverage-hole threshold
    double epsilon_start = 1.0;             // exploration schedule (linear)
    double epsilon_end = 0.05;
    std::int64_t epsilon_decay_steps = 50000;
    std::size_t replay_capacity = 50000;
    int batch_size = 32;
    double learning_rate = 1e-4;
    int target_sync_period = 1000;          // gradient steps between syncs
    int max_episode_steps = 30;
    int train_period = 1;                   // gradient step every N env steps

    void validate() const
    {
        if (reach < 1)
            throw std::invalid_argument("AgentConfig: reach must be at least 1");
        if (gamma <= 0.0 || gamma > 1.0)
            throw std::invalid_argument("AgentConfig: gamma must be in (0, 1]");
        if (alpha < 0.0)
            throw std::invalid_argument("AgentConfig: alpha must be non-negative");
        if (epsilon_start < 0.0 || epsilon_start > 1.0 || epsilon_end < 0.0 ||
            epsilon_end > 1.0)
            throw std::invalid_argument("AgentConfig: exploration probabilities in [0,1]");
        if (epsilon_decay_steps < 1)
            throw std::invalid_argument("AgentConfig: decay horizon must be positive");
        if (batch_size < 1 || replay_capacity < static_cast<std::size_t>(batch_size))
            throw std::invalid_argument("AgentConfig: capacity must hold at least one batch");
        if (learning_rate <= 0.0)
            throw std::invalid_argument("AgentConfig: learning rate must be positive");
        if (target_sync_period < 1 || max_episode_steps < 1 || train_period < 1)
            throw std::invalid_argument("AgentConfig: periods must be positive");
    }
};

/// Reward for one transition. The hole check applies to the measurement at
/// the *reached* cell; the validity penalty applies to the *proposed* cell.
/// When an invalid proposal is clamped onto a hole, the hole case wins.
inline double reward(GridPoint predicted, GridPoint actual, const PointSet &permissible,
                     double z_next, double eps_ch)
{
    (void)actual; // z_next is the measurement taken there
    if (z_next <= eps_ch)
        return 0.0;
    if (!permissible.contains(predicted))
        return -1.25;
    return -0.25;
}

/// Row-major first-encountered-wins argmax.
template <typename T> int argmax_row_major(const T *q, int n)
{
    int best = 0;
    for (int i = 1; i < n; ++i)
        if (q[i] > q[best])
            best = i;
    return best;
}

/// Copy encoded states into network input tensors. One position per state,
/// in full-grid coordinates.
template <typename T>
void pack_states(const std::vector<const StateTensors *> &states, Tensor<T> &xa, Tensor<T> &xb)
{
    if (states.empty())
        throw std::invalid_argument("pack_states: empty batch");
    const int n = static_cast<int>(states.size());
    const int side = states[0]->side;
    const int crop = states[0]->crop_side();
    xa = Tensor<T>({n, 3, side, side});
    xb = Tensor<T>({n, 3, crop, crop});
    for (int s = 0; s < n; ++s)
    {
        const StateTensors &st = *states[static_cast<std::size_t>(s)];
        if (st.side != side || st.crop_side() != crop)
            throw std::invalid_argument("pack_states: mixed state geometries");
        for (std::size_t i = 0; i < st.full.size(); ++i)
            xa.values[static_cast<std::size_t>(s) * st.full.size() + i] =
                static_cast<T>(st.full[i]);
        for (std::size_t i = 0; i < st.crop.size(); ++i)
            xb.values[static_cast<std::size_t>(s) * st.crop.size() + i] =
                static_cast<T>(st.crop[i]);
    }
}

/// Epsilon-greedy action over the full movement window: uniform with
/// probability epsilon, greedy (row-major tie-break) otherwise.
template <typename T>
int select_action(QNetwork<T> &net, const StateTensors &state, GridPoint p, double epsilon,
                  Rng &rng)
{
    if (epsilon < 0.0 || epsilon > 1.0)
        throw std::invalid_argument("select_action: epsilon must be in [0,1]");
    const int n_actions = net.n_actions();
    if (epsilon > 0.0 && uniform_unit(rng) < epsilon)
        return static_cast<int>(uniform_int(rng, 0, n_actions - 1));
    Tensor<T> xa, xb;
    pack_states<T>({&state}, xa, xb);
    const Tensor<T> q = net.forward(xa, xb, {p});
    return argmax_row_major(q.data(), n_actions);
}

/// One replay entry. The encoded states are implicit: the stored
/// measurement path m_0..m_{t+1} rebuilds the state (prefix without the
/// last measurement, positioned at m_t.at) and the successor state (full
/// path, positioned at m_{t+1}.at).
struct Transition
{
    int map_index = 0;
    MeasurementLog path; // at least 2 entries
    int action = 0;
    float reward = 0.0f;
    bool terminal = false;
};

class ReplayBuffer
{
  public:
    explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity)
    {
        if (capacity == 0)
            throw std::invalid_argument("ReplayBuffer: zero capacity");
    }

    void push(Transition t)
    {
        if (t.path.size() < 2)
            throw std::invalid_argument("ReplayBuffer: transition path too short");
        if (items_.size() < capacity_)
        {
            items_.push_back(std::move(t));
        }
        else
        {
            items_[next_] = std::move(t);
        }
        next_ = (next_ + 1) % capacity_;
    }

    std::size_t size() const { return items_.size(); }
    std::size_t capacity() const { return capacity_; }
    const Transition &operator[](std::size_t i) const { return items_[i]; }

    /// Uniform with replacement.
    std::vector<std::size_t> sample(Rng &rng, int batch) const
    {
        if (items_.size() < static_cast<std::size_t>(batch))
            throw std::logic_error("ReplayBuffer: fewer items than batch size");
        std::vector<std::size_t> idx(static_cast<std::size_t>(batch));
        for (auto &i : idx)
            i = static_cast<std::size_t>(
                uniform_int(rng, 0, static_cast<std::int64_t>(items_.size()) - 1));
        return idx;
    }

  private:
    std::size_t capacity_;
    std::size_t next_ = 0;
    std::vector<Transition> items_;
};

/// Double-estimator targets: y = r for terminal transitions, otherwise
/// r + gamma * Q_target(h', argmax_a Q_policy(h', a)).
template <typename T>
std::vector<double> ddqn_targets(QNetwork<T> &policy, QNetwork<T> &target, const Tensor<T> &xa_next,
                                 const Tensor<T> &xb_next, const std::vector<GridPoint> &pos_next,
                                 const std::vector<float> &rewards,
                                 const std::vector<unsigned char> &terminal, double gamma)
{
    const std::size_t n = rewards.size();
    if (terminal.size() != n || pos_next.size() != n)
        throw std::invalid_argument("ddqn_targets: batch size mismatch");
    const Tensor<T> q_policy = policy.forward(xa_next, xb_next, pos_next);
    const Tensor<T> q_target = target.forward(xa_next, xb_next, pos_next);
    const int n_actions = q_policy.shape[1];
    std::vector<double> y(n);
    for (std::size_t s = 0; s < n; ++s)
    {
        y[s] = static_cast<double>(rewards[s]);
        if (!terminal[s])
        {
            const int best =
                argmax_row_major(q_policy.data() + s * static_cast<std::size_t>(n_actions),
                                 n_actions);
            y[s] += gamma * static_cast<double>(
                                q_target.values[s * static_cast<std::size_t>(n_actions) +
                                                static_cast<std::size_t>(best)]);
        }
    }
    return y;
}

/// Single-estimator targets (used to verify that the double estimator
/// collapses to this exactly when policy and target weights coincide).
template <typename T>
std::vector<double> dqn_targets(QNetwork<T> &target, const Tensor<T> &xa_next,
                                const Tensor<T> &xb_next, const std::vector<GridPoint> &pos_next,
                                const std::vector<float> &rewards,
                                const std::vector<unsigned char> &terminal, double gamma)
{
    const std::size_t n = rewards.size();
    const Tensor<T> q_target = target.forward(xa_next, xb_next, pos_next);
    const int n_actions = q_target.shape[1];
    std::vector<double> y(n);
    for (std::size_t s = 0; s < n; ++s)
    {
        y[s] = static_cast<double>(rewards[s]);
        if (!terminal[s])
        {
            const int best =
                argmax_row_major(q_target.data() + s * static_cast<std::size_t>(n_actions),
                                 n_actions);
            y[s] += gamma * static_cast<double>(
                                q_target.values[s * static_cast<std::size_t>(n_actions) +
                                                static_cast<std::size_t>(best)]);
        }
    }
    return y;
}

/// Mean over the batch of (y - Q(h,a))^2 + alpha * r^2, with gradients
/// flowing only through Q(h,a). Fills `dq` (same shape as `q`) and
/// returns the loss.
template <typename T>
double ddqn_loss_grad(const Tensor<T> &q, const std::vector<int> &actions,
                      const std::vector<double> &targets, const std::vector<float> &rewards,
                      double alpha, Tensor<T> &dq)
{
    const std::size_t n = static_cast<std::size_t>(q.shape[0]);
    const int n_actions = q.shape[1];
    if (actions.size() != n || targets.size() != n || rewards.size() != n)
        throw std::invalid_argument("ddqn_loss_grad: batch size mismatch");
    dq = Tensor<T>(q.shape);
    double loss = 0.0;
    for (std::size_t s = 0; s < n; ++s)
    {
        if (actions[s] < 0 || actions[s] >= n_actions)
            throw std::invalid_argument("ddqn_loss_grad: action index out of range");
        const std::size_t at = s * static_cast<std::size_t>(n_actions) +
                               static_cast<std::size_t>(actions[s]);
        const double qv = static_cast<double>(q.values[at]);
        const double diff = qv - targets[s];
        loss += diff * diff + alpha * static_cast<double>(rewards[s]) * rewards[s];
        dq.values[at] = static_cast<T>(2.0 * diff / static_cast<double>(n));
    }
    return loss / static_cast<double>(n);
}

struct EpisodeRow
{
    int episode = 0;
    int steps = 0;
    double episode_return = 0.0;
    bool found_ch = false;
    double epsilon = 0.0;
    double loss_mean = std::numeric_limits<double>::quiet_NaN();
};

/// Training loop over an in-memory corpus of building maps and their
/// coverage maps. Deterministic given the seed: environment, exploration
/// and replay sampling run on independent derived streams.
class DdqnTrainer
{
  public:
    DdqnTrainer(const std::vector<BuildingMap> *maps, const std::vector<CoverageMap> *cms,
                AgentConfig cfg, std::uint64_t seed)
        : maps_(maps), cms_(cms), cfg_(cfg), policy_(cfg.reach, derive_seed(seed, 10)),
          target_(cfg.reach, derive_seed(seed, 10)), buffer_(cfg.replay_capacity),
          env_rng_(make_rng(derive_seed(seed, 1))), action_rng_(make_rng(derive_seed(seed, 2))),
          replay_rng_(make_rng(derive_seed(seed, 3)))
    {
        cfg_.validate();
        if (maps_ == nullptr || cms_ == nullptr || maps_->empty() || maps_->size() != cms_->size())
            throw std::invalid_argument("DdqnTrainer: need one coverage map per building map");
        typename Adam<float>::Config adam_cfg;
        adam_cfg.lr = static_cast<float>(cfg_.learning_rate);
        opt_ = std::make_unique<Adam<float>>(policy_.params(), adam_cfg);
        copy_weights(policy_, target_);

        builders_.reserve(maps_->size());
        starts_.resize(maps_->size());
        for (std::size_t m = 0; m < maps_->size(); ++m)
        {
            const BuildingMap &map = (*maps_)[m];
            const CoverageMap &cm = (*cms_)[m];
            if (cm.side() != map.side())
                throw std::invalid_argument("DdqnTrainer: coverage/map side mismatch");
            builders_.emplace_back(map, cfg_.reach, cfg_.kernel_scale, cfg_.ch_threshold_db);
            for (int i = 0; i < map.side(); ++i)
                for (int j = 0; j < map.side(); ++j)
                {
                    const GridPoint p{i, j};
                    // Start cells: outside buildings and not already a hole
                    // (a zero-length episode carries no learning signal).
                    if (!map.occupied(p) && cm.measurable(p) &&
                        cm.at(p) > cfg_.ch_threshold_db)
                        starts_[m].push_back(p);
                }
        }
        bool any = false;
        for (const auto &s : starts_)
            any = any || !s.empty();
        if (!any)
            throw std::invalid_argument("DdqnTrainer: no eligible start cells in the corpus");
    }

    const AgentConfig &config() const { return cfg_; }
    QNetwork<float> &policy() { return policy_; }
    QNetwork<float> &target() { return target_; }
    Adam<float> &optimizer() { return *opt_; }
    const StateBuilder &builder(std::size_t map_index) const { return builders_[map_index]; }
    ReplayBuffer &buffer() { return buffer_; }
    std::int64_t env_steps() const { return env_steps_; }
    std::int64_t grad_steps() const { return grad_steps_; }
    int episodes_done() const { return episodes_done_; }

    /// Restore loop counters when resuming from a checkpoint.
    void set_counters(int episodes, std::int64_t env_steps, std::int64_t grad_steps)
    {
        episodes_done_ = episodes;
        env_steps_ = env_steps;
        grad_steps_ = grad_steps;
    }

    double epsilon_at(std::int64_t env_step) const
    {
        const double frac =
            std::min(1.0, static_cast<double>(env_step) /
                              static_cast<double>(cfg_.epsilon_decay_steps));
        return cfg_.epsilon_start + (cfg_.epsilon_end - cfg_.epsilon_start) * frac;
    }

    /// Run `episodes` additional episodes, appending one row per episode.
    void run(int episodes, std::vector<EpisodeRow> *log)
    {
        for (int e = 0; e < episodes; ++e)
        {
            EpisodeRow row = run_episode();
            row.episode = episodes_done_;
            if (log != nullptr)
                log->push_back(row);
        }
    }

  private:
    EpisodeRow run_episode()
    {
        // Pick a map with at least one eligible start.
        std::size_t m = 0;
        do
        {
            m = static_cast<std::size_t>(
                uniform_int(env_rng_, 0, static_cast<std::int64_t>(maps_->size()) - 1));
        } while (starts_[m].empty());
        const BuildingMap &map = (*maps_)[m];
        const CoverageMap &cm = (*cms_)[m];
        const StateBuilder &builder = builders_[m];

        GridPoint p = starts_[m][static_cast<std::size_t>(uniform_int(
            env_rng_, 0, static_cast<std::int64_t>(starts_[m].size()) - 1))];
        MeasurementLog log = {{p, cm.at(p)}};

        EpisodeRow row;
        double loss_sum = 0.0;
        int loss_count = 0;
        for (int t = 0; t < cfg_.max_episode_steps; ++t)
        {
            const StateTensors state = builder.build(p, log);
            row.epsilon = epsilon_at(env_steps_);
            const int action = select_action(policy_, state, p, row.epsilon, action_rng_);
            const auto [di, dj] = action_to_offset(action, cfg_.reach);
            const GridPoint predicted{p.i + di, p.j + dj};

            const PointSet prm = permissible_set(map, p, cfg_.reach);
            const GridPoint actual = clamp_to_path(p, predicted, prm);
            const double z = cm.at(actual);
            const double r = reward(predicted, actual, prm, z, cfg_.ch_threshold_db);
            const bool terminal = z <= cfg_.ch_threshold_db;

            log.push_back({actual, z});
            buffer_.push({static_cast<int>(m), log, action, static_cast<float>(r), terminal});
            ++env_steps_;
            row.episode_return += r;
            ++row.steps;

            if (buffer_.size() >= static_cast<std::size_t>(cfg_.batch_size) &&
                env_steps_ % cfg_.train_period == 0)
            {
                loss_sum += gradient_step();
                ++loss_count;
            }

            p = actual;
            if (terminal)
            {
                row.found_ch = true;
                break;
            }
        }
        if (loss_count > 0)
            row.loss_mean = loss_sum / loss_count;
        ++episodes_done_;
        return row;
    }

    double gradient_step()
    {
        const std::vector<std::size_t> idx = buffer_.sample(replay_rng_, cfg_.batch_size);
        const std::size_t n = idx.size();

        std::vector<StateTensors> states;
        std::vector<StateTensors> next_states;
        states.reserve(n);
        next_states.reserve(n);
        std::vector<GridPoint> pos(n), pos_next(n);
        std::vector<int> actions(n);
        std::vector<float> rewards(n);
        std::vector<unsigned char> terminal(n);
        for (std::size_t s = 0; s < n; ++s)
        {
            const Transition &tr = buffer_[idx[s]];
            const StateBuilder &b = builders_[static_cast<std::size_t>(tr.map_index)];
            MeasurementLog prefix(tr.path.begin(), tr.path.end() - 1);
            pos[s] = prefix.back().at;
            pos_next[s] = tr.path.back().at;
            states.push_back(b.build(pos[s], prefix));
            next_states.push_back(b.build(pos_next[s], tr.path));
            actions[s] = tr.action;
            rewards[s] = tr.reward;
            terminal[s] = tr.terminal ? 1 : 0;
        }

        std::vector<const StateTensors *> cur_ptr(n), next_ptr(n);
        for (std::size_t s = 0; s < n; ++s)
        {
            cur_ptr[s] = &states[s];
            next_ptr[s] = &next_states[s];
        }
        Tensor<float> xa, xb, xa2, xb2;
        pack_states(cur_ptr, xa, xb);
        pack_states(next_ptr, xa2, xb2);

        const std::vector<double> y =
            ddqn_targets(policy_, target_, xa2, xb2, pos_next, rewards, terminal, cfg_.gamma);
        const Tensor<float> q = policy_.forward(xa, xb, pos);
        Tensor<float> dq;
        const double loss = ddqn_loss_grad(q, actions, y, rewards, cfg_.alpha, dq);
        if (!std::isfinite(loss))
            throw std::runtime_error("training diverged: non-finite loss at gradient step " +
                                     std::to_string(grad_steps_));
        policy_.backward(dq);
        opt_->step();
        ++grad_steps_;
        if (grad_steps_ % cfg_.target_sync_period == 0)
            copy_weights(policy_, target_);
        return loss;
    }

    const std::vector<BuildingMap> *maps_;
    const std::vector<CoverageMap> *cms_;
    AgentConfig cfg_;
    QNetwork<float> policy_;
    QNetwork<float> target_;
    std::unique_ptr<Adam<float>> opt_;
    ReplayBuffer buffer_;
    std::vector<StateBuilder> builders_;
    std::vector<std::vector<GridPoint>> starts_;
    Rng env_rng_, action_rng_, replay_rng_;
    std::int64_t env_steps_ = 0;
    std::int64_t grad_steps_ = 0;
    int episodes_done_ = 0;
};

/// Greedy rollout predictor backed by the policy network. Sees only the
/// measurements collected so far — never the coverage map.
class DdqnPredictor final : public Predictor
{
  public:
    DdqnPredictor(QNetwork<float> *net, const StateBuilder *builder)
        : net_(net), builder_(builder)
    {
        if (net == nullptr || builder == nullptr)
            throw std::invalid_argument("DdqnPredictor: null network or state builder");
        if (net->reach() != builder->reach())
            throw std::invalid_argument("DdqnPredictor: network/builder window mismatch");
    }

    bool needs_full_coverage() const override { return false; }

    GridPoint predict(const BuildingMap &map, const CoverageMap *cm, GridPoint p,
                      const MeasurementLog &log) override
    {
        (void)map;
        (void)cm; // always null: this predictor declares point access only
        const StateTensors state = builder_->build(p, log);
        Tensor<float> xa, xb;
        pack_states<float>({&state}, xa, xb);
        const Tensor<float> q = net_->forward(xa, xb, {p});
        const int action = argmax_row_major(q.data(), net_->n_actions());
        const auto [di, dj] = action_to_offset(action, net_->reach());
        return {p.i + di, p.j + dj};
    }

  private:
    QNetwork<float> *net_;
    const StateBuilder *builder_;
};

} // namespace chdet
