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
// chdet command-line interface. Five subcommands cover the pipeline:
//
//   gen-maps      synthesize a corpus of building maps
//   gen-coverage  raytrace-free RSRP rasters plus base-station records
//   train         fit the DDQN hole-seeking agent on a corpus
//   eval          run the precision/recall experiment
//   report        rebuild summary CSVs from a saved run log
//
// Flags can also be given in a key=value config file (--config); explicit
// flags win over the file, which wins over built-in defaults. CHD_SEED
// serves as the seed fallback when --seed is not passed.

#include "chdet/baselines.hpp"
#include "chdet/checkpoint.hpp"
#include "chdet/chgrid.hpp"
#include "chdet/ddqn.hpp"
#include "chdet/eval.hpp"
#include "chdet/mapgen.hpp"
#include "chdet/propagation.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace
{

void write_text_file(const fs::path &path, const std::string &text)
{
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw std::runtime_error(path.string() + ": cannot open for writing");
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!f)
        throw std::runtime_error(path.string() + ": write failed");
}

void append_number(std::string &out, double v)
{
    chdet::detail::format_value(out, v);
}

// ---------------------------------------------------------------- corpus

struct Corpus
{
    std::vector<chdet::BuildingMap> maps;
    std::vector<std::string> map_files;
};

Corpus load_corpus(const fs::path &dir)
{
    const fs::path manifest = dir / "manifest.csv";
    if (!fs::exists(manifest))
        throw std::runtime_error(manifest.string() + ": manifest not found (run gen-maps first)");
    Corpus corpus;
    for (const auto &row : chdet::load_manifest(manifest.string()))
    {
        corpus.maps.push_back(chdet::load_building_map((dir / row.file).string()));
        corpus.map_files.push_back(row.file);
    }
    return corpus;
}

struct CoverageRecord
{
    std::string file;
    std::string map_file;
    int bs_i = 0;
    int bs_j = 0;
    double bs_height_m = 0.0;
    double ch_threshold_db = 0.0;
};

constexpr const char *kCoverageHeader = "file,map_file,bs_i,bs_j,bs_height_m,ch_threshold_db";

void save_coverage_manifest(const fs::path &path, const std::vector<CoverageRecord> &rows)
{
    std::string text = std::string(kCoverageHeader) + "\n";
    for (const CoverageRecord &r : rows)
    {
        text += r.file + ',' + r.map_file + ',';
        text += std::to_string(r.bs_i) + ',' + std::to_string(r.bs_j) + ',';
        append_number(text, r.bs_height_m);
        text += ',';
        append_number(text, r.ch_threshold_db);
        text += '\n';
    }
    write_text_file(path, text);
}

std::vector<CoverageRecord> load_coverage_manifest(const fs::path &path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error(path.string() +
                                 ": coverage manifest not found (run gen-coverage first)");
    std::string line;
    if (!std::getline(in, line) || line != kCoverageHeader)
        throw std::runtime_error(path.string() + ": bad coverage manifest header");
    std::vector<CoverageRecord> rows;
    while (std::getline(in, line))
    {
        if (line.empty())
            continue;
        std::vector<std::string> cols;
        std::stringstream ss(line);
        std::string col;
        while (std::getline(ss, col, ','))
            cols.push_back(col);
        if (cols.size() != 6)
            throw std::runtime_error(path.string() + ": bad coverage row: " + line);
        CoverageRecord r;
        r.file = cols[0];
        r.map_file = cols[1];
        r.bs_i = std::stoi(cols[2]);
        r.bs_j = std::stoi(cols[3]);
        r.bs_height_m = std::stod(cols[4]);
        r.ch_threshold_db = std::stod(cols[5]);
        rows.push_back(std::move(r));
    }
    if (rows.empty())
        throw std::runtime_error(path.string() + ": coverage manifest has no rows");
    return rows;
}

std::vector<chdet::CoverageMap> load_coverage(const fs::path &dir, const Corpus &corpus)
{
    const auto records = load_coverage_manifest(dir / "coverage.csv");
    if (records.size() != corpus.maps.size())
        throw std::runtime_error("coverage manifest row count does not match the map manifest");
    std::vector<chdet::CoverageMap> cms;
    cms.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i)
    {
        if (records[i].map_file != corpus.map_files[i])
            throw std::runtime_error("coverage row " + std::to_string(i) +
                                     " refers to a different map file; regenerate coverage");
        const chdet::GridFile grid = chdet::load_grid((dir / records[i].file).string());
        if (grid.kind != "rsrp" || grid.side != corpus.maps[i].side())
            throw std::runtime_error(records[i].file + ": not an rsrp raster for this corpus");
        chdet::BaseStation bs{{records[i].bs_i, records[i].bs_j}, records[i].bs_height_m};
        cms.emplace_back(grid.side, grid.resolution_m, grid.values, bs,
                         records[i].ch_threshold_db);
    }
    return cms;
}

std::vector<std::string> split_list(const std::string &text)
{
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty())
            out.push_back(item);
    return out;
}

std::string trim(const std::string &s)
{
    const auto a = s.find_first_not_of(" \t\r");
    const auto b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
}

/// Layer a key=value config file under the explicit flags: every key maps
/// to the flag of the same name, and keys whose flag was already given on
/// the command line are ignored (defaults < file < flags). The expanded
/// tokens are spliced in right after the subcommand name.
std::vector<std::string> apply_config_file(std::vector<std::string> args)
{
    std::string config_path;
    for (std::size_t i = 0; i < args.size(); ++i)
    {
        if (args[i] == "--config" && i + 1 < args.size())
        {
            config_path = args[i + 1];
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i),
                       args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
            break;
        }
        if (args[i].rfind("--config=", 0) == 0)
        {
            config_path = args[i].substr(9);
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
            break;
        }
    }
    if (config_path.empty())
        return args;

    std::ifstream f(config_path);
    if (!f)
        throw std::runtime_error(config_path + ": cannot open config file");
    const auto given_explicitly = [&args](const std::string &flag) {
        const std::string eq = flag + "=";
        for (const std::string &a : args)
            if (a == flag || a.rfind(eq, 0) == 0)
                return true;
        return false;
    };

    std::vector<std::string> extra;
    std::string line;
    int line_no = 0;
    while (std::getline(f, line))
    {
        ++line_no;
        const std::string text = trim(line);
        if (text.empty() || text[0] == '#')
            continue;
        const auto pos = text.find('=');
        if (pos == std::string::npos || pos == 0)
            throw std::runtime_error(config_path + ":" + std::to_string(line_no) +
                                     ": expected key=value");
        const std::string flag = "--" + trim(text.substr(0, pos));
        if (!given_explicitly(flag))
            extra.push_back(flag + "=" + trim(text.substr(pos + 1)));
    }

    const auto at = args.begin() + (args.empty() ? 0 : 1); // after the subcommand
    args.insert(at, extra.begin(), extra.end());
    return args;
}

// -------------------------------------------------------------- gen-maps

struct GenMapsArgs
{
    int n = 10;
    int side = 121;
    double fill = 0.3;
    double resolution_m = 4.0;
    int min_street = 2;
    int footprint_min = 5;
    int footprint_max = 20;
    std::uint64_t seed = 0;
    std::string out;
};

int cmd_gen_maps(const GenMapsArgs &a)
{
    chdet::MapGenParams params;
    params.side = a.side;
    params.resolution_m = a.resolution_m;
    params.target_fill = a.fill;
    params.min_street = a.min_street;
    params.footprint_min = a.footprint_min;
    params.footprint_max = a.footprint_max;
    params.seed = a.seed;

    const auto manifest = chdet::generate_corpus(params, a.n, a.out);
    std::printf("gen-maps: wrote %zu maps and manifest.csv to %s\n", manifest.size(),
                a.out.c_str());
    return 0;
}

// ---------------------------------------------------------- gen-coverage

struct GenCoverageArgs
{
    std::string corpus;
    std::uint64_t seed = 0;
    double p0 = -40.0;
    double exponent = 2.0;
    double wall_loss = 10.0;
    double wall_recovery_m = 8.0;
    int max_wall = 4;
    double threshold = -100.0;
};

int cmd_gen_coverage(const GenCoverageArgs &a)
{
    const fs::path dir(a.corpus);
    const Corpus corpus = load_corpus(dir);

    chdet::PropagationParams params;
    params.p0_db = a.p0;
    params.pathloss_exponent = a.exponent;
    params.wall_loss_db = a.wall_loss;
    params.wall_recovery_m = a.wall_recovery_m;
    params.max_wall_losses = a.max_wall;

    std::vector<CoverageRecord> records;
    for (std::size_t i = 0; i < corpus.maps.size(); ++i)
    {
        const chdet::BuildingMap &map = corpus.maps[i];
        const chdet::BaseStation bs =
            chdet::place_base_station(map, a.seed + static_cast<std::uint64_t>(i));
        const chdet::CoverageMap cm = chdet::compute_coverage(map, bs, params, a.threshold);

        char name[32];
        std::snprintf(name, sizeof(name), "cov_%04zu.chgrid", i);
        chdet::GridFile grid;
        grid.kind = "rsrp";
        grid.side = cm.side();
        grid.resolution_m = cm.resolution_m();
        grid.altitude_m = map.altitude_m();
        grid.values = cm.rsrp();
        chdet::save_grid((dir / name).string(), grid);

        records.push_back({name, corpus.map_files[i], bs.cell.i, bs.cell.j,
                           bs.antenna_height_m, a.threshold});
    }
    save_coverage_manifest(dir / "coverage.csv", records);
    std::printf("gen-coverage: wrote %zu rsrp rasters and coverage.csv to %s\n", records.size(),
                a.corpus.c_str());
    return 0;
}

// ------------------------------------------------------------------ train

struct TrainArgs
{
    std::string corpus;
    std::string ckpt;
    std::string resume;
    std::string log;
    int episodes = 2000;
    std::uint64_t seed = 0;
    chdet::AgentConfig agent;
};

int cmd_train(const TrainArgs &a)
{
    const fs::path dir(a.corpus);
    const Corpus corpus = load_corpus(dir);
    const auto cms = load_coverage(dir, corpus);

    chdet::AgentConfig cfg = a.agent;
    cfg.validate();
    chdet::DdqnTrainer trainer(&corpus.maps, &cms, cfg, a.seed);

    if (!a.resume.empty())
    {
        const auto meta =
            chdet::load_qnet_checkpoint(a.resume, trainer.policy(), &trainer.optimizer());
        const auto need = [&](const char *key) {
            auto it = meta.find(key);
            if (it == meta.end())
                throw std::runtime_error(a.resume + ": checkpoint lacks meta." +
                                         std::string(key));
            return it->second;
        };
        if (static_cast<int>(need("reach")) != cfg.reach)
            throw std::runtime_error(a.resume + ": checkpoint movement radius differs from --reach");
        // The target net restarts in sync with the policy; the periodic
        // copy re-establishes the usual lag within one sync interval.
        chdet::copy_weights(trainer.policy(), trainer.target());
        trainer.set_counters(static_cast<int>(need("episodes")),
                             static_cast<std::int64_t>(need("env_steps")),
                             static_cast<std::int64_t>(need("grad_steps")));
    }

    std::vector<chdet::EpisodeRow> log;
    trainer.run(a.episodes, &log);

    std::string text = "episode,steps,return,found_ch,epsilon,loss_mean\n";
    for (const chdet::EpisodeRow &row : log)
    {
        text += std::to_string(row.episode) + ',' + std::to_string(row.steps) + ',';
        append_number(text, row.episode_return);
        text += ',';
        text += row.found_ch ? '1' : '0';
        text += ',';
        append_number(text, row.epsilon);
        text += ',';
        append_number(text, row.loss_mean);
        text += '\n';
    }
    const std::string log_path = a.log.empty() ? a.ckpt + ".log.csv" : a.log;
    write_text_file(log_path, text);

    chdet::save_qnet_checkpoint(
        a.ckpt, trainer.policy(), &trainer.optimizer(),
        {{"reach", static_cast<double>(cfg.reach)},
         {"kernel_scale", cfg.kernel_scale},
         {"ch_threshold_db", cfg.ch_threshold_db},
         {"side", static_cast<double>(corpus.maps.front().side())},
         {"episodes", static_cast<double>(trainer.episodes_done())},
         {"env_steps", static_cast<double>(trainer.env_steps())},
         {"grad_steps", static_cast<double>(trainer.grad_steps())}});
    std::printf("train: %d episodes done (%lld env steps, %lld gradient steps); "
                "checkpoint %s, log %s\n",
                trainer.episodes_done(), static_cast<long long>(trainer.env_steps()),
                static_cast<long long>(trainer.grad_steps()), a.ckpt.c_str(), log_path.c_str());
    return 0;
}

// ------------------------------------------------------------------- eval

struct EvalArgs
{
    std::string corpus;
    std::string out = "report";
    std::string methods = "rsp,bnp,grsp,gbnp";
    std::string budgets = "1,2,4";
    std::string ckpt;
    int n_sam = 100;
    int step_limit = 15;
    double bnp_distance_m = 8.0;
    std::uint64_t seed = 0;
    bool independent_starts = false;
    bool dump_trajectories = false;
};

json summary_to_json(const chdet::EvalSummary &s)
{
    return {{"type", "summary"},   {"method", s.method},
            {"k", s.k},            {"n_sam", s.n_sam},
            {"precision_mean", s.precision_mean}, {"precision_std", s.precision_std},
            {"recall_mean", s.recall_mean},       {"recall_std", s.recall_std},
            {"n_maps", s.n_maps}};
}

int cmd_eval(const EvalArgs &a)
{
    const fs::path dir(a.corpus);
    const Corpus corpus = load_corpus(dir);
    const auto cms = load_coverage(dir, corpus);

    chdet::ExperimentConfig cfg;
    cfg.methods = split_list(a.methods);
    cfg.n_sam = a.n_sam;
    cfg.step_budgets.clear();
    for (const std::string &k : split_list(a.budgets))
        cfg.step_budgets.push_back(std::stoi(k));
    cfg.step_limit = a.step_limit;
    cfg.bnp_distance_m = a.bnp_distance_m;
    cfg.seed = a.seed;
    cfg.shared_starts = !a.independent_starts;

    const bool wants_ddqn =
        std::find(cfg.methods.begin(), cfg.methods.end(), "ddqn") != cfg.methods.end();
    std::optional<chdet::QNetwork<float>> net;
    chdet::DdqnEvalContext ctx;
    if (wants_ddqn)
    {
        if (a.ckpt.empty())
            throw std::runtime_error("eval: --methods includes ddqn but no --ckpt was given");
        // Peek at the stored movement radius before sizing the network.
        double reach = 0.0, kernel_scale = 0.1;
        for (const auto &e : chdet::load_checkpoint(a.ckpt))
        {
            if (e.name == "meta.reach" && e.dtype == 8 && e.elements() == 1)
                std::memcpy(&reach, e.raw.data(), sizeof(double));
            if (e.name == "meta.kernel_scale" && e.dtype == 8 && e.elements() == 1)
                std::memcpy(&kernel_scale, e.raw.data(), sizeof(double));
        }
        if (reach < 1.0)
            throw std::runtime_error(a.ckpt + ": checkpoint lacks meta.reach");
        net.emplace(static_cast<int>(reach), 0);
        chdet::load_qnet_checkpoint(a.ckpt, *net);
        ctx.net = &*net;
        ctx.kernel_scale = kernel_scale;
    }

    const fs::path out_dir(a.out);
    fs::create_directories(out_dir);
    std::string runlog;

    chdet::TrajectorySink sink;
    if (a.dump_trajectories)
    {
        fs::create_directories(out_dir / "traj");
        sink = [&](int map_index, const std::string &method, int k, int sample,
                   const chdet::Trajectory &traj) {
            std::string text = "step,i,j,rsrp\n";
            for (std::size_t s = 0; s < traj.waypoints.size(); ++s)
            {
                text += std::to_string(s) + ',' + std::to_string(traj.waypoints[s].i) + ',' +
                        std::to_string(traj.waypoints[s].j) + ',';
                append_number(text, traj.measurements[s].rsrp_db);
                text += '\n';
            }
            char name[96];
            std::snprintf(name, sizeof(name), "map%04d_%s_k%d_s%04d.csv", map_index,
                          method.c_str(), k, sample);
            write_text_file(out_dir / "traj" / name, text);
        };
    }

    const chdet::EvalReport report =
        chdet::evaluate(corpus.maps, cms, cfg, wants_ddqn ? &ctx : nullptr, sink);

    runlog += json{{"type", "config"},
                   {"methods", cfg.methods},
                   {"k", cfg.step_budgets},
                   {"n_sam", cfg.n_sam},
                   {"step_limit", cfg.step_limit},
                   {"bnp_distance_m", cfg.bnp_distance_m},
                   {"seed", cfg.seed},
                   {"shared_starts", cfg.shared_starts}}
                  .dump() +
              '\n';
    for (int m : report.skipped_maps)
        runlog += json{{"type", "skipped"}, {"map", m}, {"reason", "no coverage holes"}}.dump() +
                  '\n';
    for (const chdet::MapMethodResult &r : report.per_map)
        runlog += json{{"type", "result"},
                       {"map", r.map_index},
                       {"method", r.method},
                       {"k", r.k},
                       {"n_sam", r.n_sam},
                       {"true_count", r.true_count},
                       {"unique_true", r.unique_true},
                       {"ch_count", r.ch_count},
                       {"precision", r.precision},
                       {"recall", r.recall}}
                      .dump() +
                  '\n';
    for (const chdet::EvalSummary &s : report.summaries)
        runlog += summary_to_json(s).dump() + '\n';
    write_text_file(out_dir / "runlog.jsonl", runlog);

    chdet::emit_report(report, out_dir);
    std::printf("eval: %zu per-map rows over %zu maps (%zu skipped); report in %s\n",
                report.per_map.size(), corpus.maps.size(), report.skipped_maps.size(),
                a.out.c_str());
    return 0;
}

// ----------------------------------------------------------------- report

int cmd_report(const std::string &runlog_path, const std::string &out)
{
    std::ifstream in(runlog_path);
    if (!in)
        throw std::runtime_error(runlog_path + ": cannot open run log");

    chdet::EvalReport report;
    int n_sam = 0;
    std::string line;
    while (std::getline(in, line))
    {
        if (line.empty())
            continue;
        const json row = json::parse(line);
        const std::string type = row.at("type").get<std::string>();
        if (type == "config")
            n_sam = row.at("n_sam").get<int>();
        else if (type == "skipped")
            report.skipped_maps.push_back(row.at("map").get<int>());
        else if (type == "result")
        {
            chdet::MapMethodResult r;
            r.map_index = row.at("map").get<int>();
            r.method = row.at("method").get<std::string>();
            r.k = row.at("k").get<int>();
            r.n_sam = row.at("n_sam").get<int>();
            r.true_count = row.at("true_count").get<int>();
            r.unique_true = row.at("unique_true").get<int>();
            r.ch_count = row.at("ch_count").get<int>();
            r.precision = row.at("precision").get<double>();
            r.recall = row.at("recall").get<double>();
            report.per_map.push_back(std::move(r));
        }
        // "summary" rows are derived data; recomputed below.
    }
    if (report.per_map.empty())
        throw std::runtime_error(runlog_path + ": no result rows");

    report.summaries = chdet::summarize(report.per_map, n_sam);
    chdet::emit_report(report, out);
    std::printf("report: rebuilt summaries for %zu rows in %s\n", report.per_map.size(),
                out.c_str());
    return 0;
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"coverage hole detection workbench"};
    app.require_subcommand(1);
    app.fallthrough(); // global flags may follow the subcommand name

    GenMapsArgs gm;
    CLI::App *gen_maps = app.add_subcommand("gen-maps", "synthesize a building-map corpus");
    gen_maps->add_option("--n", gm.n, "number of maps")->capture_default_str();
    gen_maps->add_option("--l", gm.side, "grid side length in cells")->capture_default_str();
    gen_maps->add_option("--fill", gm.fill, "target occupied fraction")->capture_default_str();
    gen_maps->add_option("--resolution", gm.resolution_m, "meters per cell")
        ->capture_default_str();
    gen_maps->add_option("--min-street", gm.min_street, "minimum street width in cells")
        ->capture_default_str();
    gen_maps->add_option("--footprint-min", gm.footprint_min, "smallest building edge in cells")
        ->capture_default_str();
    gen_maps->add_option("--footprint-max", gm.footprint_max, "largest building edge in cells")
        ->capture_default_str();
    gen_maps->add_option("--seed", gm.seed, "corpus seed")->envname("CHD_SEED");
    gen_maps->add_option("--out", gm.out, "output directory")->required();

    GenCoverageArgs gc;
    CLI::App *gen_cov = app.add_subcommand("gen-coverage", "compute RSRP rasters for a corpus");
    gen_cov->add_option("--corpus", gc.corpus, "corpus directory")->required();
    gen_cov->add_option("--seed", gc.seed, "base-station placement seed")->envname("CHD_SEED");
    gen_cov->add_option("--p0", gc.p0, "transmit power at 1 cell, dB")->capture_default_str();
    gen_cov->add_option("--exp", gc.exponent, "path-loss exponent")->capture_default_str();
    gen_cov->add_option("--wall-loss", gc.wall_loss, "per-wall attenuation, dB")
        ->capture_default_str();
    gen_cov->add_option("--wall-recovery", gc.wall_recovery_m,
                        "distance halving each wall's effect, m")
        ->capture_default_str();
    gen_cov->add_option("--max-wall", gc.max_wall, "attenuation cap in wall units")
        ->capture_default_str();
    gen_cov->add_option("--threshold", gc.threshold, "hole threshold, dB")
        ->capture_default_str();

    TrainArgs tr;
    CLI::App *train = app.add_subcommand("train", "train the hole-seeking agent");
    train->add_option("--corpus", tr.corpus, "corpus directory")->required();
    train->add_option("--episodes", tr.episodes, "episodes to run")->capture_default_str();
    train->add_option("--seed", tr.seed, "training seed")->envname("CHD_SEED");
    train->add_option("--ckpt", tr.ckpt, "checkpoint output path")->required();
    train->add_option("--resume", tr.resume, "checkpoint to continue from");
    train->add_option("--log", tr.log, "training-log CSV path (default: <ckpt>.log.csv)");
    train->add_option("--reach", tr.agent.reach, "movement radius, cells")
        ->capture_default_str();
    train->add_option("--kernel-scale", tr.agent.kernel_scale, "state kernel decay")
        ->capture_default_str();
    train->add_option("--gamma", tr.agent.gamma, "discount factor")->capture_default_str();
    train->add_option("--alpha", tr.agent.alpha, "reward regularizer weight")
        ->capture_default_str();
    train->add_option("--threshold", tr.agent.ch_threshold_db, "hole threshold, dB")
        ->capture_default_str();
    train->add_option("--epsilon-decay", tr.agent.epsilon_decay_steps,
                      "steps to reach the final exploration rate")
        ->capture_default_str();
    train->add_option("--replay", tr.agent.replay_capacity, "replay buffer capacity")
        ->capture_default_str();
    train->add_option("--batch", tr.agent.batch_size, "minibatch size")->capture_default_str();
    train->add_option("--lr", tr.agent.learning_rate, "learning rate")->capture_default_str();
    train->add_option("--sync", tr.agent.target_sync_period, "target sync period, grad steps")
        ->capture_default_str();
    train->add_option("--max-steps", tr.agent.max_episode_steps, "episode step cap")
        ->capture_default_str();
    train->add_option("--train-period", tr.agent.train_period,
                      "environment steps per gradient step")
        ->capture_default_str();

    EvalArgs ev;
    CLI::App *eval_cmd = app.add_subcommand("eval", "run the precision/recall experiment");
    eval_cmd->add_option("--corpus", ev.corpus, "corpus directory")->required();
    eval_cmd->add_option("--out", ev.out, "report output directory")->capture_default_str();
    eval_cmd->add_option("--methods", ev.methods, "comma list: rsp,bnp,grsp,gbnp,ddqn")
        ->capture_default_str();
    eval_cmd->add_option("--k", ev.budgets, "comma list of step budgets")
        ->capture_default_str();
    eval_cmd->add_option("--n-sam", ev.n_sam, "trajectories per map")->capture_default_str();
    eval_cmd->add_option("--step-limit", ev.step_limit, "movement radius, cells")
        ->capture_default_str();
    eval_cmd->add_option("--bnp-distance", ev.bnp_distance_m, "building-neighborhood width, m")
        ->capture_default_str();
    eval_cmd->add_option("--seed", ev.seed, "start-sampling seed")->envname("CHD_SEED");
    eval_cmd->add_option("--ckpt", ev.ckpt, "trained checkpoint (required for ddqn)");
    eval_cmd->add_flag("--independent-starts", ev.independent_starts,
                       "draw per-method starts instead of family-shared ones");
    eval_cmd->add_flag("--dump-trajectories", ev.dump_trajectories,
                       "write one CSV per rollout under <out>/traj/");

    std::string rp_runlog, rp_out = "report";
    CLI::App *report_cmd =
        app.add_subcommand("report", "rebuild summary CSVs from a saved run log");
    report_cmd->add_option("--runlog", rp_runlog, "runlog.jsonl from a previous eval")
        ->required();
    report_cmd->add_option("--out", rp_out, "report output directory")->capture_default_str();

    int jobs = 1;
    app.add_option("--jobs", jobs, "worker cap for corpus/eval stages (execution is serial)")
        ->capture_default_str();

    // The key=value config file is layered in before CLI11 sees the args,
    // so each subcommand only documents the flag here.
    std::string config_doc;
    for (CLI::App *sub : {gen_maps, gen_cov, train, eval_cmd, report_cmd})
        sub->add_option("--config", config_doc,
                        "key=value file supplying defaults for any flag of this subcommand");

    std::vector<std::string> args(argv + 1, argv + argc);
    try
    {
        args = apply_config_file(std::move(args));
    }
    catch (const std::exception &e)
    {
        std::fprintf(stderr, "chdet: %s\n", e.what());
        return 1;
    }
    std::reverse(args.begin(), args.end());
    try
    {
        app.parse(std::move(args));
    }
    catch (const CLI::ParseError &e)
    {
        return app.exit(e);
    }

    try
    {
        if (gen_maps->parsed())
            return cmd_gen_maps(gm);
        if (gen_cov->parsed())
            return cmd_gen_coverage(gc);
        if (train->parsed())
            return cmd_train(tr);
        if (eval_cmd->parsed())
            return cmd_eval(ev);
        if (report_cmd->parsed())
            return cmd_report(rp_runlog, rp_out);
    }
    catch (const std::exception &e)
    {
        std::fprintf(stderr, "chdet: %s\n", e.what());
        return 1;
    }
    return 1;
}
