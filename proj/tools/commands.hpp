#pragma once

// Subcommand implementations for the hipexo tool. Kept in a header so the
// test suite can run them in-process.

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hipexo/hipexo.hpp"

namespace hipexo::cli {

namespace fs = std::filesystem;
using nlohmann::json;

enum ExitCode : int { kOk = 0, kRuntimeFailure = 1, kUsageError = 2 };

struct RunContext {
    std::string command;
    fs::path config_path;
    json config;
    std::string config_hash;
    std::uint64_t seed = 1;
    fs::path out_dir;
    std::ostream* out = &std::cout;
    std::ostream* err = &std::cerr;

    fs::path resolve(const std::string& p) const {
        const fs::path path(p);
        return path.is_absolute() ? path : config_path.parent_path() / path;
    }

    std::vector<std::string> header_lines() const {
        return {"tool hipexo " + std::string(kVersion), "command " + command, "config_hash fnv1a64:" + config_hash,
                "seed " + std::to_string(seed)};
    }

    json provenance() const {
        return {{"tool", "hipexo"},
                {"version", kVersion},
                {"command", command},
                {"config_hash", "fnv1a64:" + config_hash},
                {"seed", seed}};
    }
};

/// Tracks every file a command writes so a failed run can remove them.
class OutputSet {
public:
    explicit OutputSet(const RunContext& ctx) : ctx_(ctx) {}

    void prepare() {
        if (!fs::exists(ctx_.out_dir)) {
            fs::create_directories(ctx_.out_dir);
            created_.push_back(ctx_.out_dir);
        } else if (!fs::is_directory(ctx_.out_dir)) {
            throw ConfigError("output path '" + ctx_.out_dir.string() + "' is not a directory");
        }
    }

    fs::path path(const std::string& relative) {
        const fs::path p = ctx_.out_dir / relative;
        std::vector<fs::path> fresh;
        for (fs::path d = p.parent_path(); !d.empty() && !fs::exists(d); d = d.parent_path()) fresh.push_back(d);
        fs::create_directories(p.parent_path());
        for (auto it = fresh.rbegin(); it != fresh.rend(); ++it) created_.push_back(*it);
        files_.push_back(p);
        return p;
    }

    std::ofstream open(const std::string& relative) {
        std::ofstream f(path(relative), std::ios::binary);
        if (!f) throw Error("cannot write '" + (ctx_.out_dir / relative).string() + "'");
        return f;
    }

    /// Registers a companion file written by library code (e.g. a sidecar).
    void adopt(const fs::path& p) { files_.push_back(p); }

    void discard() noexcept {
        std::error_code ec;
        for (const auto& f : files_) fs::remove(f, ec);
        for (auto it = created_.rbegin(); it != created_.rend(); ++it)
            if (fs::is_empty(*it, ec)) fs::remove(*it, ec);
        files_.clear();
        created_.clear();
    }

private:
    const RunContext& ctx_;
    std::vector<fs::path> files_;
    std::vector<fs::path> created_;
};

// ---------------------------------------------------------------------------
// Config helpers

template <class T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.is_object() || !j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config key '") + key + "': " + e.what());
    }
}

inline std::string task_file_name(const ActivityLabel& l) {
    std::string s = to_string(l);
    std::replace(s.begin(), s.end(), ' ', '_');
    return s;
}

inline ControllerParams load_params_key(const RunContext& ctx, const char* key, bool required) {
    if (!ctx.config.contains(key)) {
        if (required) throw ConfigError(std::string("config: '") + key + "' (controller params file) is required");
        return ControllerParams{};
    }
    const fs::path p = ctx.resolve(get_or<std::string>(ctx.config, key, ""));
    if (!fs::exists(p)) throw ConfigError("params file not found: '" + p.string() + "'");
    return load_params(p.string());
}

/// Files named directly, or every *.csv in a named directory (sorted).
inline std::vector<fs::path> expand_csv_paths(const RunContext& ctx, const std::vector<std::string>& entries) {
    std::vector<fs::path> out;
    for (const auto& e : entries) {
        const fs::path p = ctx.resolve(e);
        if (fs::is_directory(p)) {
            std::vector<fs::path> dir;
            for (const auto& de : fs::directory_iterator(p))
                if (de.is_regular_file() && de.path().extension() == ".csv") dir.push_back(de.path());
            std::sort(dir.begin(), dir.end());
            out.insert(out.end(), dir.begin(), dir.end());
        } else if (fs::exists(p)) {
            out.push_back(p);
        } else {
            throw ConfigError("input not found: '" + p.string() + "'");
        }
    }
    return out;
}

using TaskMap = std::map<ActivityLabel, std::vector<StrideSeries>>;

/// Strides grouped by task from the "data" section: synthetic battery,
/// normalized stride files and/or raw trials with a schema map.
inline TaskMap load_tasks(const RunContext& ctx) {
    if (!ctx.config.contains("data")) throw ConfigError("config: 'data' section is required");
    const json& data = ctx.config.at("data");
    TaskMap tasks;
    if (data.contains("synthetic")) {
        const json& syn = data.at("synthetic");
        std::vector<ActivityLabel> labels;
        const json tj = syn.contains("tasks") ? syn.at("tasks") : json("standard");
        if (tj.is_string() && tj.get<std::string>() == "standard") {
            labels = standard_battery_labels();
        } else if (tj.is_array()) {
            for (const auto& t : tj) labels.push_back(parse_activity(t.get<std::string>()));
        } else {
            throw ConfigError("data.synthetic.tasks must be \"standard\" or a list of task names");
        }
        const auto count = get_or<std::size_t>(syn, "strides", 10);
        const auto samples = get_or<std::size_t>(syn, "samples", kDefaultStrideSamples);
        if (count < 1) throw ConfigError("data.synthetic.strides must be >= 1");
        for (const auto& l : labels) {
            auto s = synth_strides(l, ctx.seed, count, samples);
            auto& dst = tasks[l];
            dst.insert(dst.end(), s.begin(), s.end());
        }
    }
    if (data.contains("stride_files")) {
        for (const auto& p : expand_csv_paths(ctx, get_or<std::vector<std::string>>(data, "stride_files", {}))) {
            auto s = read_stride(p.string());
            tasks[s.label].push_back(std::move(s));
        }
    }
    if (data.contains("trials")) {
        for (const auto& t : data.at("trials")) {
            const auto path = ctx.resolve(get_or<std::string>(t, "path", ""));
            const json schema_j = t.at("schema").is_string() ? read_json_file(ctx.resolve(t.at("schema")).string())
                                                              : t.at("schema");
            const auto schema = TrialSchema::from_json(schema_j);
            const auto trial = load_trial(path.string(), schema);
            if (!trial.label) throw ConfigError("trial '" + path.string() + "': schema must name the task");
            for (const auto& r : segment_strides(trial))
                if (!r.flagged) tasks[*trial.label].push_back(normalize_stride(trial, r));
        }
    }
    if (tasks.empty()) throw ConfigError("config: 'data' yields no strides");
    return tasks;
}

inline std::vector<TaskSet> task_sets(const RunContext& ctx, const TaskMap& tasks) {
    std::map<std::string, double> weights;
    if (ctx.config.contains("weights")) weights = get_or<std::map<std::string, double>>(ctx.config, "weights", {});
    std::vector<TaskSet> out;
    for (const auto& [label, strides] : tasks) {
        double w = default_task_weight(label);
        if (const auto it = weights.find(to_string(label)); it != weights.end()) w = it->second;
        out.push_back({label, strides, w});
    }
    return out;
}

inline void write_similarity(OutputSet& outputs, const RunContext& ctx, const std::vector<TaskSim>& sims) {
    auto f = outputs.open("similarity.csv");
    csv::write_comments(f, ctx.header_lines());
    f << "task,sim_mean,sim_sd,strides\n";
    for (const auto& s : sims)
        f << to_string(s.label) << ',' << csv::format_double(s.mean) << ',' << csv::format_double(s.sd) << ','
          << s.strides << '\n';
    auto t = outputs.open("similarity.txt");
    csv::write_comments(t, ctx.header_lines());
    t << format_similarity_table(sims);
}

// ---------------------------------------------------------------------------
// simulate

inline double mean_power_similarity(const std::vector<StrideSeries>& assisted) {
    double sum = 0.0;
    for (const auto& s : assisted) {
        const auto p = hip_powers(s);
        const auto net = joint_power(s.at(channel::hip_moment), s.at(channel::hip_velocity));
        sum += cosine_similarity(p.exo, net).value();
    }
    return sum / static_cast<double>(assisted.size());
}

inline void write_ensemble(std::ostream& f, const std::vector<StrideSeries>& unassisted,
                           const std::vector<StrideSeries>& assisted) {
    std::vector<std::vector<double>> exo_t, net_m, bio_u, bio_a, exo_p, tot_p;
    for (std::size_t i = 0; i < assisted.size(); ++i) {
        const auto pu = hip_powers(unassisted[i]);
        const auto pa = hip_powers(assisted[i]);
        exo_t.push_back(assisted[i].at(channel::exo_torque));
        net_m.push_back(assisted[i].at(channel::hip_moment));
        bio_u.push_back(pu.biological);
        bio_a.push_back(pa.biological);
        exo_p.push_back(pa.exo);
        tot_p.push_back(pa.total);
    }
    const std::vector<std::pair<const char*, Ensemble>> cols{
        {"exo_torque", ensemble_average(exo_t)},           {"net_hip_moment", ensemble_average(net_m)},
        {"bio_hip_power_unassisted", ensemble_average(bio_u)}, {"bio_hip_power_assisted", ensemble_average(bio_a)},
        {"exo_hip_power", ensemble_average(exo_p)},        {"total_hip_power", ensemble_average(tot_p)}};
    const std::size_t n = cols.front().second.mean.size();
    std::vector<double> pct(n);
    for (std::size_t i = 0; i < n; ++i) pct[i] = 100.0 * static_cast<double>(i) / static_cast<double>(n - 1);
    std::vector<std::string> names{"percent_cycle"};
    std::vector<const std::vector<double>*> data{&pct};
    for (const auto& [name, e] : cols) {
        names.push_back(std::string(name) + "_mean");
        data.push_back(&e.mean);
        names.push_back(std::string(name) + "_sd");
        data.push_back(&e.sd);
    }
    csv::write_columns(f, names, data);
}

inline int cmd_simulate(const RunContext& ctx, OutputSet& outputs) {
    const auto params = load_params_key(ctx, "params", true);
    const auto tasks = load_tasks(ctx);
    ReplayOptions ro;
    ro.loop_rate_hz = params.loop_rate_hz;
    if (ctx.config.contains("replay")) {
        const json& r = ctx.config.at("replay");
        ro.warmup_strides = get_or<std::size_t>(r, "warmup_strides", ro.warmup_strides);
        ro.sts_hold_s = get_or<double>(r, "sts_hold_s", ro.sts_hold_s);
    }
    for (const auto& [label, strides] : tasks)
        if (strides.size() < 2) throw ConfigError("simulate: task " + to_string(label) + " needs >= 2 strides");

    outputs.prepare();
    const auto header = ctx.header_lines();
    EnergeticsReport report;
    std::uint64_t task_index = 0;
    for (const auto& [label, strides] : tasks) {
        const std::string name = task_file_name(label);
        const auto stream = build_replay_stream(strides, ro, ctx.seed * 7919ULL + task_index++);
        const auto log = replay(params, stream.frames);
        {
            auto f = outputs.open("frames_" + name + ".csv");
            write_frame_log(f, stream.frames, header);
        }
        {
            auto f = outputs.open("breakdown_" + name + ".csv");
            write_breakdown_log(f, log, header);
        }
        const auto assisted = assisted_strides(strides, stream, log);
        auto ru = energetics_row(strides, Condition::unassisted);
        auto ra = energetics_row(assisted.strides, Condition::assisted);
        ra.mean_extension_scale = assisted.mean_extension_scale;
        try {
            ra.sim = mean_power_similarity(assisted.strides);
        } catch (const DataError&) {
            // zero assistance on some stride: similarity undefined
        }
        report.rows.push_back(ru);
        report.rows.push_back(ra);
        {
            auto f = outputs.open("ensemble_" + name + ".csv");
            csv::write_comments(f, header);
            write_ensemble(f, strides, assisted.strides);
        }
        for (std::size_t i = 0; i < strides.size(); ++i) {
            char idx[8];
            std::snprintf(idx, sizeof idx, "%03zu", i);
            for (const auto& [cond, s] : {std::pair{"unassisted", &strides[i]}, std::pair{"assisted", &assisted.strides[i]}}) {
                const auto p = outputs.path(std::string("strides/") + cond + "/" + name + "_" + idx + ".csv");
                outputs.adopt(p.string() + ".meta.json");
                write_stride(p.string(), *s, header, ctx.provenance());
            }
        }
    }
    {
        auto f = outputs.open("energetics.csv");
        report.write_csv(f, header);
    }
    const auto paired = pair_conditions(report, nullptr);
    {
        auto f = outputs.open("paired.csv");
        write_paired_csv(f, paired, header);
    }
    {
        auto j = report.to_json();
        j["provenance"] = ctx.provenance();
        auto f = outputs.open("energetics.json");
        f << j.dump(2) << '\n';
    }
    *ctx.out << "simulated " << tasks.size() << " tasks\n";
    for (const auto& r : paired)
        *ctx.out << "  " << to_string(r.task) << ": hip positive work " << csv::format_double(r.unassisted->hip_work)
                 << " -> " << csv::format_double(r.assisted->hip_work) << " J/kg\n";
    return kOk;
}

// ---------------------------------------------------------------------------
// optimize

inline ObjectiveSpec objective_spec(const RunContext& ctx, std::vector<TaskSet> tasks) {
    ObjectiveSpec spec;
    spec.tasks = std::move(tasks);
    if (ctx.config.contains("objective")) {
        const json& o = ctx.config.at("objective");
        spec.c_static = get_or<double>(o, "c_static", spec.c_static);
        spec.c_sign = get_or<double>(o, "c_sign", spec.c_sign);
        spec.target_scale = get_or<double>(o, "target_scale", spec.target_scale);
        spec.sign_deadband = get_or<double>(o, "sign_deadband", spec.sign_deadband);
    }
    if (ctx.config.contains("free")) spec.free = get_or<std::vector<std::string>>(ctx.config, "free", {});
    if (ctx.config.contains("bounds")) {
        for (const auto& [name, b] : ctx.config.at("bounds").items()) {
            param_field(name);
            if (!b.is_array() || b.size() != 2) throw ConfigError("bounds." + name + " must be [lower, upper]");
            spec.bounds[name] = {b.at(0).get<double>(), b.at(1).get<double>()};
        }
    }
    spec.validate();
    return spec;
}

inline int cmd_optimize(const RunContext& ctx, OutputSet& outputs) {
    ControllerParams warm = load_params_key(ctx, "params", false);
    auto tasks = task_sets(ctx, load_tasks(ctx));
    if (ctx.config.contains("reference_params")) {
        const auto ref = load_params_key(ctx, "reference_params", true);
        const double scale = ctx.config.contains("objective")
                                 ? get_or<double>(ctx.config.at("objective"), "target_scale", 0.2)
                                 : 0.2;
        tasks = with_reference_moment(std::move(tasks), ref, scale);
    }
    const auto spec = objective_spec(ctx, std::move(tasks));
    const auto budget = get_or<long long>(ctx.config, "budget", 20000);
    if (budget < 1) throw ConfigError("optimize: budget must be >= 1");
    if (const double pert = get_or<double>(ctx.config, "warm_start_perturbation", 0.0); pert != 0.0) {
        double sign = 1.0;
        for (const auto& name : spec.free) {
            const auto& f = param_field(name);
            const auto& b = spec.bounds.at(name);
            f.set(warm, std::clamp(f.get(warm) * (1.0 + sign * pert), b.lower, b.upper));
            sign = -sign;
        }
    }
    check_bounds(warm, spec);

    const auto result = optimize(spec, warm, static_cast<std::size_t>(budget), ctx.seed);

    outputs.prepare();
    const auto header = ctx.header_lines();
    {
        auto f = outputs.open("trace.csv");
        csv::write_comments(f, header);
        f << "iteration,evaluations,best_objective\n";
        for (const auto& r : result.trace)
            f << r.iteration << ',' << r.evaluations << ',' << csv::format_double(r.best) << '\n';
    }
    {
        auto prov = ctx.provenance();
        prov["objective_initial"] = result.initial_objective;
        prov["objective_final"] = result.best_objective;
        prov["evaluations"] = result.evaluations;
        prov["convergence"] = result.reason;
        save_params(outputs.path("params.json").string(), result.best, prov);
    }
    write_similarity(outputs, ctx, result.sims);

    *ctx.out << "objective " << csv::format_double(result.initial_objective) << " -> "
             << csv::format_double(result.best_objective) << " (" << result.evaluations << " evaluations, "
             << result.reason << ")\n";
    *ctx.out << "static torque at zero kinematics: " << csv::format_double(static_torque(result.best)) << " Nm\n";
    *ctx.out << format_similarity_table(result.sims);
    return kOk;
}

// ---------------------------------------------------------------------------
// metrics

inline std::vector<StrideSeries> read_stride_set(const RunContext& ctx, const char* key) {
    std::vector<StrideSeries> out;
    if (!ctx.config.contains(key)) return out;
    for (const auto& p : expand_csv_paths(ctx, get_or<std::vector<std::string>>(ctx.config, key, {})))
        out.push_back(read_stride(p.string()));
    return out;
}

inline void add_rows(EnergeticsReport& report, const std::vector<StrideSeries>& strides, Condition cond) {
    std::map<ActivityLabel, std::vector<StrideSeries>> by_task;
    for (const auto& s : strides) by_task[s.label].push_back(s);
    for (const auto& [label, set] : by_task) report.rows.push_back(energetics_row(set, cond));
}

inline int cmd_metrics(const RunContext& ctx, OutputSet& outputs) {
    const auto unassisted = read_stride_set(ctx, "unassisted");
    const auto assisted = read_stride_set(ctx, "assisted");
    if (unassisted.empty() && assisted.empty()) throw ConfigError("metrics: no input strides");
    EnergeticsReport report;
    add_rows(report, unassisted, Condition::unassisted);
    add_rows(report, assisted, Condition::assisted);
    std::stable_sort(report.rows.begin(), report.rows.end(), [](const EnergeticsRow& a, const EnergeticsRow& b) {
        return a.task < b.task;
    });
    std::vector<ActivityLabel> unmatched;
    const auto paired = pair_conditions(report, &unmatched);
    for (const auto& t : unmatched)
        *ctx.err << "warning: task " << to_string(t) << " has only one condition; left out of the paired report\n";

    outputs.prepare();
    const auto header = ctx.header_lines();
    {
        auto f = outputs.open("energetics.csv");
        report.write_csv(f, header);
    }
    {
        auto f = outputs.open("paired.csv");
        write_paired_csv(f, paired, header);
    }
    {
        auto j = report.to_json();
        j["provenance"] = ctx.provenance();
        auto f = outputs.open("energetics.json");
        f << j.dump(2) << '\n';
    }
    *ctx.out << "task        hip W+ change   lower-limb W+ change\n";
    for (const auto& r : paired) {
        std::ostringstream line;
        line << std::left << std::setw(12) << to_string(r.task) << std::right << std::fixed << std::setprecision(2)
             << std::setw(12) << r.hip_work_change_pct << " %" << std::setw(18) << r.lower_limb_work_change_pct
             << " %";
        *ctx.out << line.str() << '\n';
    }
    return kOk;
}

// ---------------------------------------------------------------------------
// detect-hs

inline std::vector<SensorFrame> read_imu_frames(const std::string& path) {
    const auto t = csv::read_file(path);
    for (const char* c : {"timestamp", "l_theta_thigh", "r_theta_thigh", "thigh_accel_normal_l",
                          "thigh_accel_normal_r", "pelvis_accel"})
        if (!t.has_column(c)) throw DataError("detect-hs: '" + path + "' is missing channel '" + c + "'");
    const auto ts = t.numeric("timestamp"), lth = t.numeric("l_theta_thigh"), rth = t.numeric("r_theta_thigh"),
               al = t.numeric("thigh_accel_normal_l"), ar = t.numeric("thigh_accel_normal_r"),
               pa = t.numeric("pelvis_accel");
    std::vector<SensorFrame> out(ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i) {
        out[i].timestamp = ts[i];
        out[i].side[0].theta_thigh = lth[i];
        out[i].side[1].theta_thigh = rth[i];
        out[i].imu = {al[i], ar[i], pa[i], ts[i]};
    }
    return out;
}

inline std::array<std::vector<double>, 2> read_ground_truth(const std::string& path) {
    const auto t = csv::read_file(path);
    const auto side_col = t.column("side");
    const auto ts_col = t.column("timestamp");
    std::array<std::vector<double>, 2> out;
    for (const auto& r : t.rows) {
        if (r[side_col] == "left")
            out[0].push_back(csv::parse_double(r[ts_col]));
        else if (r[side_col] == "right")
            out[1].push_back(csv::parse_double(r[ts_col]));
        else
            throw DataError("ground truth: side must be 'left' or 'right'");
    }
    return out;
}

inline void write_truth(std::ostream& f, const std::array<std::vector<double>, 2>& truth) {
    f << "side,timestamp\n";
    for (std::size_t side = 0; side < 2; ++side)
        for (double t : truth[side]) f << (side == 0 ? "left" : "right") << ',' << csv::format_double(t) << '\n';
}

inline int cmd_detect_hs(const RunContext& ctx, OutputSet& outputs) {
    HsDetectorConfig cfg;
    if (ctx.config.contains("hs_detector")) {
        json wrap{{"hs_detector", ctx.config.at("hs_detector")}};
        cfg = params_from_json(wrap).hs;
    }
    cfg.validate();
    const double tolerance = get_or<double>(ctx.config, "tolerance_s", 0.03);

    std::vector<SensorFrame> frames;
    std::optional<std::array<std::vector<double>, 2>> truth;
    const bool synthetic = ctx.config.contains("synthetic");
    if (synthetic) {
        const json& s = ctx.config.at("synthetic");
        HsStreamSpec spec;
        spec.sample_rate_hz = cfg.sample_rate_hz;
        spec.duration_s = get_or<double>(s, "duration_s", spec.duration_s);
        spec.step_period_s = get_or<double>(s, "step_period_s", spec.step_period_s);
        if (get_or<bool>(s, "descent_ablation", false)) spec = descent_ablation(spec);
        auto stream = synth_hs_stream(spec, ctx.seed);
        frames = std::move(stream.frames);
        truth = stream.hs_truth;
    } else if (ctx.config.contains("frames")) {
        frames = read_imu_frames(ctx.resolve(get_or<std::string>(ctx.config, "frames", "")).string());
    } else {
        throw ConfigError("detect-hs: config needs 'frames' or 'synthetic'");
    }
    if (ctx.config.contains("ground_truth"))
        truth = read_ground_truth(ctx.resolve(get_or<std::string>(ctx.config, "ground_truth", "")).string());

    const auto events = detect_heel_strikes(cfg, frames);

    outputs.prepare();
    const auto header = ctx.header_lines();
    if (synthetic) {
        auto f = outputs.open("frames.csv");
        write_frame_log(f, frames, header);
        auto t = outputs.open("ground_truth.csv");
        csv::write_comments(t, header);
        write_truth(t, *truth);
    }
    {
        auto f = outputs.open("events.csv");
        csv::write_comments(f, header);
        f << "side,timestamp,source,theta_thigh_l,theta_thigh_r,theta_diff\n";
        for (const auto& e : events)
            f << to_string(e.side) << ',' << csv::format_double(e.timestamp) << ',' << to_string(e.source) << ','
              << csv::format_double(e.thigh_snapshot.theta_thigh_l) << ','
              << csv::format_double(e.thigh_snapshot.theta_thigh_r) << ','
              << csv::format_double(e.thigh_snapshot.theta_diff) << '\n';
    }
    json summary{{"provenance", ctx.provenance()}, {"frames", frames.size()}, {"events", events.size()}};
    std::size_t left = 0, pelvis = 0;
    for (const auto& e : events) {
        left += e.side == Side::left;
        pelvis += e.source != HsSource::thigh;
    }
    summary["events_left"] = left;
    summary["events_right"] = events.size() - left;
    summary["events_with_pelvis"] = pelvis;
    *ctx.out << events.size() << " heel strikes (" << left << " left, " << events.size() - left << " right)\n";
    if (truth) {
        const double from_s = frames.empty() ? 0.0 : frames.front().timestamp + cfg.min_history_s;
        const auto sc = score_heel_strikes(*truth, events, tolerance, from_s);
        summary["ground_truth_events"] = sc.truth;
        summary["matched"] = sc.matched;
        summary["precision"] = sc.precision();
        summary["recall"] = sc.recall();
        summary["max_timing_error_s"] = sc.max_timing_error;
        summary["tolerance_s"] = tolerance;
        summary["scored_from_s"] = from_s;
        *ctx.out << "precision " << csv::format_double(sc.precision()) << ", recall "
                 << csv::format_double(sc.recall()) << ", max timing error "
                 << csv::format_double(sc.max_timing_error) << " s\n";
    }
    auto f = outputs.open("summary.json");
    f << summary.dump(2) << '\n';
    return kOk;
}

// ---------------------------------------------------------------------------
// report

inline int cmd_report(const RunContext& ctx, OutputSet& outputs) {
    const auto params = load_params_key(ctx, "params", true);
    const auto tasks = task_sets(ctx, load_tasks(ctx));
    const auto sims = report_similarity(params, tasks);
    outputs.prepare();
    write_similarity(outputs, ctx, sims);
    *ctx.out << format_similarity_table(sims);
    return kOk;
}

// ---------------------------------------------------------------------------

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Hip exoskeleton controller: replay, optimization, metrics and heel-strike detection", "hipexo"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    struct Args {
        std::string config;
        std::string out;
        std::uint64_t seed = 1;
    };
    Args args;
    const std::vector<std::pair<std::string, std::string>> commands{
        {"simulate", "replay strides through the controller and write logs, ensembles and energetics"},
        {"optimize", "fit controller parameters to a task battery"},
        {"metrics", "energetics report from assisted/unassisted stride sets"},
        {"detect-hs", "heel-strike detection over an IMU stream"},
        {"report", "per-task similarity table for a parameter set"}};
    for (const auto& [name, desc] : commands) {
        auto* sub = app.add_subcommand(name, desc);
        sub->add_option("--config", args.config, "JSON run configuration")->required();
        sub->add_option("--out", args.out, "output directory")->required();
        sub->add_option("--seed", args.seed, "random seed")->capture_default_str();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForVersion&) {
        out << kVersion << '\n';
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kUsageError;
    }

    RunContext ctx;
    ctx.command = app.get_subcommands().front()->get_name();
    ctx.config_path = args.config;
    ctx.seed = args.seed;
    ctx.out_dir = args.out;
    ctx.out = &out;
    ctx.err = &err;

    OutputSet outputs(ctx);
    try {
        std::string bytes;
        {
            std::ifstream in(ctx.config_path, std::ios::binary);
            if (!in) throw ConfigError("cannot open config '" + ctx.config_path.string() + "'");
            std::ostringstream ss;
            ss << in.rdbuf();
            bytes = ss.str();
        }
        ctx.config_hash = csv::hex64(csv::fnv1a(bytes));
        try {
            ctx.config = json::parse(bytes);
        } catch (const json::parse_error& e) {
            throw ConfigError("'" + ctx.config_path.string() + "': " + e.what());
        }
        if (!ctx.config.is_object()) throw ConfigError("config must be a JSON object");

        if (ctx.command == "simulate") return cmd_simulate(ctx, outputs);
        if (ctx.command == "optimize") return cmd_optimize(ctx, outputs);
        if (ctx.command == "metrics") return cmd_metrics(ctx, outputs);
        if (ctx.command == "detect-hs") return cmd_detect_hs(ctx, outputs);
        return cmd_report(ctx, outputs);
    } catch (const ConfigError& e) {
        outputs.discard();
        err << "config error: " << e.what() << '\n';
        return kUsageError;
    } catch (const nlohmann::json::exception& e) {
        outputs.discard();
        err << "config error: " << e.what() << '\n';
        return kUsageError;
    } catch (const std::exception& e) {
        outputs.discard();
        err << "error: " << e.what() << '\n';
        return kRuntimeFailure;
    }
}

}  // namespace hipexo::cli
