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
// Precision/recall experiment harness. Every method is evaluated through
// the same trajectory executor on the same corpus: N_sam trajectories per
// map, each ending in one predicted hole cell. A prediction counts as
// true when it lands in the map's hole set; precision is the fraction of
// true predictions, recall the fraction of distinct hole cells found.

#pragma once

#include "baselines.hpp"
#include "chgrid.hpp"
#include "ddqn.hpp"
#include "propagation.hpp"
#include "rollout.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace chdet
{

inline const std::vector<std::string> &known_methods()
{
    static const std::vector<std::string> names = {"rsp", "bnp", "grsp", "gbnp", "ddqn"};
    return names;
}

/// bnp and gbnp sample their starts near buildings; the rest sample
/// uniformly over unoccupied cells.
inline bool uses_neighborhood(const std::string &method)
{
    return method == "bnp" || method == "gbnp";
}

struct ExperimentConfig
{
    std::vector<std::string> methods = {"rsp", "bnp", "grsp", "gbnp"};
    int n_sam = 100;
    std::vector<int> step_budgets = {1, 2, 4};
    int step_limit = 15;         // per-hop movement radius, in cells
    double bnp_distance_m = 8.0; // building-neighborhood width
    std::uint64_t seed = 0;
    bool shared_starts = true; // methods of a family fly from the same starts

    void validate() const
    {
        if (methods.empty())
            throw std::invalid_argument("ExperimentConfig: no methods selected");
        for (const auto &m : methods)
        {
            const auto &known = known_methods();
            if (std::find(known.begin(), known.end(), m) == known.end())
                throw std::invalid_argument("ExperimentConfig: unknown method '" + m + "'");
            if (std::count(methods.begin(), methods.end(), m) != 1)
                throw std::invalid_argument("ExperimentConfig: duplicate method '" + m + "'");
        }
        if (n_sam < 1)
            throw std::invalid_argument("ExperimentConfig: n_sam must be positive");
        if (step_budgets.empty())
            throw std::invalid_argument("ExperimentConfig: no step budgets");
        for (int k : step_budgets)
            if (k < 1)
                throw std::invalid_argument("ExperimentConfig: step budgets must be positive");
        if (step_limit < 1)
            throw std::invalid_argument("ExperimentConfig: step_limit must be positive");
        if (!(bnp_distance_m > 0.0))
            throw std::invalid_argument("ExperimentConfig: bnp_distance_m must be positive");
    }
};

/// Learned-agent dependencies; required only when "ddqn" is among the
/// evaluated methods.
struct DdqnEvalContext
{
    QNetwork<float> *net = nullptr;
    double kernel_scale = 0.1;
};

struct MapMethodResult
{
    int map_index = 0;
    std::string method;
    int k = 0;           // step budget
    int n_sam = 0;       // trajectories flown on this map (≤ requested)
    int true_count = 0;  // predictions inside the hole set
    int unique_true = 0; // distinct hole cells among them
    int ch_count = 0;    // size of the hole set
    double precision = 0.0;
    double recall = 0.0;
};

struct EvalSummary
{
    std::string method;
    int k = 0;
    int n_sam = 0;
    double precision_mean = 0.0;
    double precision_std = 0.0;
    double recall_mean = 0.0;
    double recall_std = 0.0;
    int n_maps = 0;
};

struct EvalReport
{
    std::vector<MapMethodResult> per_map;
    std::vector<EvalSummary> summaries;
    std::vector<int> skipped_maps; // maps without any coverage hole
};

struct MetricCounts
{
    int true_count = 0;  // predictions inside the hole set
    int unique_true = 0; // distinct hole cells among them
};

/// Score a batch of predicted hole cells against the ground-truth hole
/// set. Repeated hits on the same cell all count toward true_count but
/// only once toward unique_true.
inline MetricCounts score_predictions(const std::vector<GridPoint> &predictions,
                                      const PointSet &holes, int side)
{
    MetricCounts out;
    PointSet uniques(side);
    for (const GridPoint &p : predictions)
        if (holes.contains(p))
        {
            ++out.true_count;
            uniques.insert(p);
        }
    for (int i = 0; i < side; ++i)
        for (int j = 0; j < side; ++j)
            out.unique_true += uniques.contains({i, j}) ? 1 : 0;
    return out;
}

struct MeanStd
{
    double mean = 0.0;
    double std = 0.0;
};

/// Sample mean and sample standard deviation (n-1 denominator; 0 when a
/// single observation leaves the spread undefined).
inline MeanStd mean_std(const std::vector<double> &xs)
{
    MeanStd out;
    if (xs.empty())
        return out;
    double sum = 0.0;
    for (double x : xs)
        sum += x;
    out.mean = sum / static_cast<double>(xs.size());
    if (xs.size() < 2)
        return out;
    double ss = 0.0;
    for (double x : xs)
        ss += (x - out.mean) * (x - out.mean);
    out.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    return out;
}

namespace detail
{

/// Start cells for one (map, family) or (map, method): shuffle the whole
/// eligible pool once, then take the leading n_sam cells. Because the
/// shuffle does not depend on n_sam, a larger sample count extends the
/// same start sequence instead of redrawing it, so recall can only grow.
inline std::vector<GridPoint> draw_starts(std::vector<GridPoint> pool, int n_sam, Rng &rng)
{
    shuffle(pool, rng);
    if (static_cast<int>(pool.size()) > n_sam)
        pool.resize(static_cast<std::size_t>(n_sam));
    return pool;
}

inline int method_index(const std::string &method)
{
    const auto &known = known_methods();
    return static_cast<int>(std::find(known.begin(), known.end(), method) - known.begin());
}

} // namespace detail

/// Group per-map rows by (method, step budget) and reduce to mean and
/// sample spread; groups come out sorted by method name, then budget.
inline std::vector<EvalSummary> summarize(const std::vector<MapMethodResult> &rows, int n_sam)
{
    std::map<std::string, std::map<int, std::pair<std::vector<double>, std::vector<double>>>> groups;
    for (const MapMethodResult &r : rows)
    {
        auto &[ps, rs] = groups[r.method][r.k];
        ps.push_back(r.precision);
        rs.push_back(r.recall);
    }
    std::vector<EvalSummary> out;
    for (const auto &[method, by_k] : groups)
        for (const auto &[k, values] : by_k)
        {
            EvalSummary s;
            s.method = method;
            s.k = k;
            s.n_sam = n_sam;
            const MeanStd p = mean_std(values.first);
            const MeanStd r = mean_std(values.second);
            s.precision_mean = p.mean;
            s.precision_std = p.std;
            s.recall_mean = r.mean;
            s.recall_std = r.std;
            s.n_maps = static_cast<int>(values.first.size());
            out.push_back(std::move(s));
        }
    return out;
}

/// Observer invoked once per flown trajectory, in execution order.
using TrajectorySink = std::function<void(int map_index, const std::string &method, int k,
                                          int sample_index, const Trajectory &trajectory)>;

/// Run the full experiment: every selected method, every step budget,
/// every map with at least one hole. `ctx` supplies the trained network
/// when "ddqn" is selected; its movement radius must match step_limit so
/// all methods fly under the same rule.
inline EvalReport evaluate(const std::vector<BuildingMap> &maps,
                           const std::vector<CoverageMap> &cms, const ExperimentConfig &cfg,
                           const DdqnEvalContext *ctx = nullptr, const TrajectorySink &sink = {})
{
    cfg.validate();
    if (maps.size() != cms.size() || maps.empty())
        throw std::invalid_argument("evaluate: corpus and coverage lists must match and be non-empty");

    const bool wants_ddqn =
        std::find(cfg.methods.begin(), cfg.methods.end(), "ddqn") != cfg.methods.end();
    if (wants_ddqn)
    {
        if (ctx == nullptr || ctx->net == nullptr)
            throw std::invalid_argument("evaluate: ddqn selected but no trained network given");
        if (ctx->net->reach() != cfg.step_limit)
            throw std::invalid_argument("evaluate: network movement radius differs from step_limit");
    }
    const bool wants_nbh = std::any_of(cfg.methods.begin(), cfg.methods.end(),
                                       [](const std::string &m) { return uses_neighborhood(m); });
    const bool wants_uniform = std::any_of(cfg.methods.begin(), cfg.methods.end(),
                                           [](const std::string &m) { return !uses_neighborhood(m); });

    EvalReport report;
    for (std::size_t mi = 0; mi < maps.size(); ++mi)
    {
        const BuildingMap &map = maps[mi];
        const CoverageMap &cm = cms[mi];
        const PointSet holes = ch_set(cm);
        int ch_count = 0;
        for (int i = 0; i < map.side(); ++i)
            for (int j = 0; j < map.side(); ++j)
                ch_count += holes.contains({i, j}) ? 1 : 0;
        if (ch_count == 0)
        {
            report.skipped_maps.push_back(static_cast<int>(mi));
            continue;
        }

        std::vector<GridPoint> uniform_pool;
        if (wants_uniform)
            uniform_pool = unoccupied_cells(map);
        Neighborhood nbh;
        if (wants_nbh)
            nbh = make_neighborhood(map, BnpConfig{cfg.bnp_distance_m});

        // Family-shared start sequences; methods drawn independently get
        // their own stream instead.
        std::vector<GridPoint> uniform_starts, nbh_starts;
        if (cfg.shared_starts)
        {
            if (wants_uniform)
            {
                Rng rng = make_rng(derive_seed(cfg.seed, 101, static_cast<std::uint64_t>(mi), 0));
                uniform_starts = detail::draw_starts(uniform_pool, cfg.n_sam, rng);
            }
            if (wants_nbh)
            {
                Rng rng = make_rng(derive_seed(cfg.seed, 101, static_cast<std::uint64_t>(mi), 1));
                nbh_starts = detail::draw_starts(nbh.cells, cfg.n_sam, rng);
            }
        }

        // The learned agent's state encoder is built once per map.
        std::unique_ptr<StateBuilder> builder;
        if (wants_ddqn)
            builder = std::make_unique<StateBuilder>(map, ctx->net->reach(), ctx->kernel_scale,
                                                     cm.ch_threshold_db());

        for (const std::string &method : cfg.methods)
        {
            std::vector<GridPoint> starts;
            if (cfg.shared_starts)
                starts = uses_neighborhood(method) ? nbh_starts : uniform_starts;
            else
            {
                Rng rng = make_rng(derive_seed(cfg.seed, 102, static_cast<std::uint64_t>(mi),
                                               static_cast<std::uint64_t>(detail::method_index(method))));
                starts = detail::draw_starts(uses_neighborhood(method) ? nbh.cells : uniform_pool,
                                             cfg.n_sam, rng);
            }

            std::unique_ptr<Predictor> predictor;
            if (method == "rsp" || method == "bnp")
                predictor = std::make_unique<StayPutPredictor>();
            else if (method == "grsp")
                predictor = std::make_unique<GrspPredictor>(cfg.step_limit);
            else if (method == "gbnp")
                predictor = std::make_unique<GbnpPredictor>(&nbh, cfg.step_limit);
            else
                predictor = std::make_unique<DdqnPredictor>(ctx->net, builder.get());

            for (int k : cfg.step_budgets)
            {
                MapMethodResult row;
                row.map_index = static_cast<int>(mi);
                row.method = method;
                row.k = k;
                row.n_sam = static_cast<int>(starts.size());
                row.ch_count = ch_count;

                std::vector<GridPoint> predictions;
                predictions.reserve(starts.size());
                for (std::size_t s = 0; s < starts.size(); ++s)
                {
                    const Trajectory traj =
                        rollout(map, cm, *predictor, starts[s], k, cfg.step_limit);
                    if (sink)
                        sink(static_cast<int>(mi), method, k, static_cast<int>(s), traj);
                    predictions.push_back(traj.final_prediction);
                }
                const MetricCounts counts = score_predictions(predictions, holes, map.side());
                row.true_count = counts.true_count;
                row.unique_true = counts.unique_true;

                row.precision = row.n_sam > 0
                                    ? static_cast<double>(row.true_count) / row.n_sam
                                    : 0.0;
                row.recall = static_cast<double>(row.unique_true) / row.ch_count;
                report.per_map.push_back(std::move(row));
            }
        }
    }

    report.summaries = summarize(report.per_map, cfg.n_sam);
    return report;
}

namespace detail
{

inline void append_csv_number(std::string &out, double v)
{
    format_value(out, v);
}

inline void write_text_file(const std::filesystem::path &path, const std::string &text)
{
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw std::runtime_error(path.string() + ": cannot open for writing");
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!f)
        throw std::runtime_error(path.string() + ": write failed");
}

} // namespace detail

/// Write precision.csv, recall.csv and one gnuplot-friendly .dat file per
/// method and metric into `dir` (created if missing). Numbers use the
/// shortest representation that round-trips, so reruns are byte-stable.
inline void emit_report(const EvalReport &report, const std::filesystem::path &dir)
{
    std::filesystem::create_directories(dir);

    const auto metric_csv = [&](bool precision) {
        std::string text = "method,k,n_sam,mean,std,n_maps\n";
        for (const EvalSummary &s : report.summaries)
        {
            text += s.method;
            text += ',';
            text += std::to_string(s.k);
            text += ',';
            text += std::to_string(s.n_sam);
            text += ',';
            detail::append_csv_number(text, precision ? s.precision_mean : s.recall_mean);
            text += ',';
            detail::append_csv_number(text, precision ? s.precision_std : s.recall_std);
            text += ',';
            text += std::to_string(s.n_maps);
            text += '\n';
        }
        return text;
    };
    detail::write_text_file(dir / "precision.csv", metric_csv(true));
    detail::write_text_file(dir / "recall.csv", metric_csv(false));

    std::map<std::string, std::string> dat_precision, dat_recall;
    for (const EvalSummary &s : report.summaries)
    {
        auto &dp = dat_precision[s.method];
        auto &dr = dat_recall[s.method];
        if (dp.empty())
            dp = "# step_budget precision std\n";
        if (dr.empty())
            dr = "# step_budget recall std\n";
        auto line = [&](std::string &out, double mean, double std) {
            out += std::to_string(s.k);
            out += ' ';
            detail::append_csv_number(out, mean);
            out += ' ';
            detail::append_csv_number(out, std);
            out += '\n';
        };
        line(dp, s.precision_mean, s.precision_std);
        line(dr, s.recall_mean, s.recall_std);
    }
    for (const auto &[method, text] : dat_precision)
        detail::write_text_file(dir / (method + "_precision.dat"), text);
    for (const auto &[method, text] : dat_recall)
        detail::write_text_file(dir / (method + "_recall.dat"), text);
}

} // namespace chdet
