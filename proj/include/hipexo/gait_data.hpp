#pragma once

// Trial ingestion, GRF-based stride segmentation, time normalization and the
// stride file format.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "hipexo/csv.hpp"
#include "hipexo/error.hpp"
#include "hipexo/signal.hpp"

namespace hipexo {

enum class ActivityKind { level_walk, ramp_ascent, ramp_descent, stair_ascent, stair_descent, sit_to_stand };

/// Task plus its condition parameter: speed (m/s) for level walking, grade (deg)
/// for ramps, step height (in) for stairs, unused for sit-to-stand.
struct ActivityLabel {
    ActivityKind kind = ActivityKind::level_walk;
    double parameter = 1.0;

    bool is_descent() const { return kind == ActivityKind::ramp_descent || kind == ActivityKind::stair_descent; }
    bool is_gait() const { return kind != ActivityKind::sit_to_stand; }
    /// Level walking, ramp/stair ascent and sit-to-stand.
    bool is_hip_intensive() const { return !is_descent(); }

    void validate() const {
        if (!std::isfinite(parameter)) throw ConfigError("activity parameter must be finite");
        switch (kind) {
            case ActivityKind::level_walk:
                if (!(parameter > 0.0 && parameter < 3.0)) throw ConfigError("level walk speed must be in (0, 3) m/s");
                break;
            case ActivityKind::ramp_ascent:
            case ActivityKind::ramp_descent:
                if (!(parameter > 0.0 && parameter <= 20.0)) throw ConfigError("ramp grade must be in (0, 20] deg");
                break;
            case ActivityKind::stair_ascent:
            case ActivityKind::stair_descent:
                if (!(parameter > 0.0 && parameter <= 10.0)) throw ConfigError("stair step height must be in (0, 10] in");
                break;
            case ActivityKind::sit_to_stand: break;
        }
    }

    bool operator==(const ActivityLabel&) const = default;
    auto operator<=>(const ActivityLabel&) const = default;
};

inline std::string_view kind_code(ActivityKind k) {
    switch (k) {
        case ActivityKind::level_walk: return "LG";
        case ActivityKind::ramp_ascent: return "RA";
        case ActivityKind::ramp_descent: return "RD";
        case ActivityKind::stair_ascent: return "SA";
        case ActivityKind::stair_descent: return "SD";
        case ActivityKind::sit_to_stand: return "STS";
    }
    return "?";
}

/// "LG 0.85", "RA 11", "STS".
inline std::string to_string(const ActivityLabel& l) {
    std::string s(kind_code(l.kind));
    if (l.kind == ActivityKind::sit_to_stand) return s;
    return s + " " + csv::format_double(l.parameter);
}

inline ActivityLabel parse_activity(std::string_view text) {
    while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
    while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
    std::size_t split = 0;
    while (split < text.size() && std::isalpha(static_cast<unsigned char>(text[split]))) ++split;
    const std::string_view code = text.substr(0, split);
    std::string_view rest = text.substr(split);
    while (!rest.empty() && (rest.front() == ' ' || rest.front() == '_')) rest.remove_prefix(1);

    ActivityLabel l;
    if (code == "LG") l.kind = ActivityKind::level_walk;
    else if (code == "RA") l.kind = ActivityKind::ramp_ascent;
    else if (code == "RD") l.kind = ActivityKind::ramp_descent;
    else if (code == "SA") l.kind = ActivityKind::stair_ascent;
    else if (code == "SD") l.kind = ActivityKind::stair_descent;
    else if (code == "STS") l.kind = ActivityKind::sit_to_stand;
    else throw ConfigError("unknown activity '" + std::string(text) + "'");

    if (l.kind == ActivityKind::sit_to_stand) {
        l.parameter = 0.0;
        return l;
    }
    if (rest.empty()) throw ConfigError("activity '" + std::string(text) + "' needs a parameter");
    try {
        l.parameter = csv::parse_double(rest);
    } catch (const DataError&) {
        throw ConfigError("activity '" + std::string(text) + "': bad parameter");
    }
    l.validate();
    return l;
}

/// Canonical channel names. Internal units: rad, rad/s, Nm/kg, N/kg, Nm, m/s^2.
namespace channel {
inline constexpr const char* hip_angle = "hip_angle";
inline constexpr const char* hip_velocity = "hip_velocity";
inline constexpr const char* hip_angle_contra = "hip_angle_contra";
inline constexpr const char* hip_velocity_contra = "hip_velocity_contra";
inline constexpr const char* thigh_angle = "thigh_angle";
inline constexpr const char* thigh_angle_contra = "thigh_angle_contra";
inline constexpr const char* torso_angle = "torso_angle";
inline constexpr const char* hip_moment = "hip_moment";
inline constexpr const char* knee_moment = "knee_moment";
inline constexpr const char* knee_velocity = "knee_velocity";
inline constexpr const char* ankle_moment = "ankle_moment";
inline constexpr const char* ankle_velocity = "ankle_velocity";
inline constexpr const char* grf_vertical = "grf_vertical";
inline constexpr const char* exo_torque = "exo_torque";
inline constexpr const char* thigh_accel_l = "thigh_accel_l";
inline constexpr const char* thigh_accel_r = "thigh_accel_r";
inline constexpr const char* pelvis_accel = "pelvis_accel";
}  // namespace channel

enum class Quantity { angle, angular_velocity, moment, torque, force, acceleration };

inline std::optional<Quantity> channel_quantity(std::string_view name) {
    using namespace channel;
    static const std::map<std::string_view, Quantity> table{
        {hip_angle, Quantity::angle},
        {hip_angle_contra, Quantity::angle},
        {thigh_angle, Quantity::angle},
        {thigh_angle_contra, Quantity::angle},
        {torso_angle, Quantity::angle},
        {hip_velocity, Quantity::angular_velocity},
        {hip_velocity_contra, Quantity::angular_velocity},
        {knee_velocity, Quantity::angular_velocity},
        {ankle_velocity, Quantity::angular_velocity},
        {hip_moment, Quantity::moment},
        {knee_moment, Quantity::moment},
        {ankle_moment, Quantity::moment},
        {exo_torque, Quantity::torque},
        {grf_vertical, Quantity::force},
        {thigh_accel_l, Quantity::acceleration},
        {thigh_accel_r, Quantity::acceleration},
        {pelvis_accel, Quantity::acceleration},
    };
    const auto it = table.find(name);
    if (it == table.end()) return std::nullopt;
    return it->second;
}

inline constexpr double kGravity = 9.80665;

/// Multiplier taking a value in `unit` to internal units for the channel's quantity.
inline double unit_factor(std::string_view channel_name, std::string_view unit, std::optional<double> body_mass) {
    const auto q = channel_quantity(channel_name);
    if (!q) throw ConfigError("unknown channel '" + std::string(channel_name) + "'");
    const auto need_mass = [&]() {
        if (!body_mass || !(*body_mass > 0.0))
            throw ConfigError("channel '" + std::string(channel_name) + "' in unit '" + std::string(unit) +
                              "' needs a positive body_mass");
        return 1.0 / *body_mass;
    };
    constexpr double deg = std::numbers::pi / 180.0;
    switch (*q) {
        case Quantity::angle:
            if (unit == "rad") return 1.0;
            if (unit == "deg") return deg;
            break;
        case Quantity::angular_velocity:
            if (unit == "rad/s") return 1.0;
            if (unit == "deg/s") return deg;
            break;
        case Quantity::moment:
            if (unit == "Nm/kg") return 1.0;
            if (unit == "Nm") return need_mass();
            break;
        case Quantity::torque:
            if (unit == "Nm") return 1.0;
            break;
        case Quantity::force:
            if (unit == "N/kg") return 1.0;
            if (unit == "N") return need_mass();
            if (unit == "BW") return kGravity;
            break;
        case Quantity::acceleration:
            if (unit == "m/s^2") return 1.0;
            if (unit == "g") return kGravity;
            break;
    }
    throw DataError("unit mismatch: channel '" + std::string(channel_name) + "' cannot be given in '" +
                    std::string(unit) + "'");
}

struct StrideSeries {
    ActivityLabel label;
    std::map<std::string, std::vector<double>> channels;
    double body_mass = 70.0;
    double cycle_duration = 1.0;

    std::size_t size() const { return channels.empty() ? 0 : channels.begin()->second.size(); }
    bool has(const std::string& name) const { return channels.count(name) != 0; }

    const std::vector<double>& at(const std::string& name) const {
        const auto it = channels.find(name);
        if (it == channels.end())
            throw DataError("stride " + to_string(label) + ": missing channel '" + name + "'");
        return it->second;
    }

    /// Sample spacing in seconds on the normalized grid.
    double dt() const { return size() > 1 ? cycle_duration / static_cast<double>(size() - 1) : cycle_duration; }

    void validate() const {
        if (channels.empty()) throw DataError("stride: no channels");
        const std::size_t n = size();
        for (const auto& [name, v] : channels) {
            if (v.size() != n) throw DataError("stride: channel '" + name + "' length differs");
            for (double x : v)
                if (!std::isfinite(x)) throw DataError("stride: channel '" + name + "' has non-finite values");
        }
        if (!(cycle_duration > 0.0)) throw DataError("stride: cycle_duration must be positive");
        if (!(body_mass > 0.0)) throw DataError("stride: body_mass must be positive");
    }
};

struct RawTrial {
    double sample_rate_hz = 250.0;
    std::map<std::string, std::vector<double>> channels;
    std::map<std::string, std::string> metadata;
    std::optional<ActivityLabel> label;
    double body_mass = 70.0;

    std::size_t size() const { return channels.empty() ? 0 : channels.begin()->second.size(); }
    bool has(const std::string& name) const { return channels.count(name) != 0; }
    const std::vector<double>& at(const std::string& name) const {
        const auto it = channels.find(name);
        if (it == channels.end()) throw DataError("trial: missing channel '" + name + "'");
        return it->second;
    }
};

struct ChannelMapping {
    std::string column;
    std::string unit;
};

/// Maps export columns to canonical channels. Loaded from JSON:
/// { "task": "LG 0.85", "body_mass": 70, "time_column": "time", "time_unit": "s",
///   "sample_rate_hz": 250, "channels": { "hip_angle": {"column": "...", "unit": "deg"} },
///   "required": ["hip_angle", ...], "filters_hz": { "hip_angle": 6 } }
struct TrialSchema {
    std::optional<std::string> task;
    std::optional<double> body_mass;
    std::optional<std::string> time_column;
    std::string time_unit = "s";
    std::optional<double> sample_rate_hz;
    std::map<std::string, ChannelMapping> channels;
    std::vector<std::string> required;
    std::map<std::string, double> filters_hz;
    std::size_t max_nan_run = 5;

    static TrialSchema from_json(const nlohmann::json& j) {
        if (!j.is_object()) throw ConfigError("schema: expected a JSON object");
        TrialSchema s;
        try {
            if (j.contains("task")) s.task = j.at("task").get<std::string>();
            if (j.contains("body_mass")) s.body_mass = j.at("body_mass").get<double>();
            if (j.contains("time_column")) s.time_column = j.at("time_column").get<std::string>();
            if (j.contains("time_unit")) s.time_unit = j.at("time_unit").get<std::string>();
            if (j.contains("sample_rate_hz")) s.sample_rate_hz = j.at("sample_rate_hz").get<double>();
            if (j.contains("max_nan_run")) s.max_nan_run = j.at("max_nan_run").get<std::size_t>();
            if (!j.contains("channels") || !j.at("channels").is_object())
                throw ConfigError("schema: 'channels' object is required");
            for (const auto& [name, m] : j.at("channels").items()) {
                if (!channel_quantity(name)) throw ConfigError("schema: unknown canonical channel '" + name + "'");
                s.channels[name] = {m.at("column").get<std::string>(), m.at("unit").get<std::string>()};
            }
            if (j.contains("required")) s.required = j.at("required").get<std::vector<std::string>>();
            if (j.contains("filters_hz")) s.filters_hz = j.at("filters_hz").get<std::map<std::string, double>>();
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("schema: ") + e.what());
        }
        if (!s.time_column && !s.sample_rate_hz) throw ConfigError("schema: need time_column or sample_rate_hz");
        if (s.time_unit != "s" && s.time_unit != "ms") throw ConfigError("schema: time_unit must be 's' or 'ms'");
        return s;
    }
};

namespace detail {

/// Fills NaN runs of at most `max_run` samples by linear interpolation
/// (nearest value at the ends); longer runs are a load error.
inline void fill_short_nan_runs(std::vector<double>& v, std::size_t max_run, const std::string& name) {
    const std::size_t n = v.size();
    std::size_t i = 0;
    while (i < n) {
        if (!std::isnan(v[i])) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < n && std::isnan(v[j])) ++j;
        const std::size_t run = j - i;
        if (run > max_run)
            throw DataError("channel '" + name + "': run of " + std::to_string(run) + " missing samples at row " +
                            std::to_string(i + 1) + " exceeds " + std::to_string(max_run));
        if (i == 0 && j == n) throw DataError("channel '" + name + "': no valid samples");
        for (std::size_t k = i; k < j; ++k) {
            if (i == 0) v[k] = v[j];
            else if (j == n) v[k] = v[i - 1];
            else {
                const double t = static_cast<double>(k - i + 1) / static_cast<double>(run + 1);
                v[k] = v[i - 1] + t * (v[j] - v[i - 1]);
            }
        }
        i = j;
    }
}

}  // namespace detail

/// Zero-lag low-pass of selected channels on the uniform raw grid.
inline void apply_offline_filters(RawTrial& trial, const std::map<std::string, double>& cutoffs_hz) {
    for (const auto& [name, fc] : cutoffs_hz) {
        auto it = trial.channels.find(name);
        if (it == trial.channels.end()) continue;
        it->second = lowpass_zero_lag(it->second, BiquadSpec{fc, trial.sample_rate_hz});
    }
}

inline RawTrial load_trial(std::istream& in, const TrialSchema& schema, const std::string& origin = "<stream>") {
    const csv::Table table = csv::parse(in);
    RawTrial trial;
    if (schema.task) trial.label = parse_activity(*schema.task);
    if (schema.body_mass) trial.body_mass = *schema.body_mass;
    trial.metadata["source"] = origin;

    if (schema.time_column) {
        if (!table.has_column(*schema.time_column))
            throw DataError(origin + ": missing time column '" + *schema.time_column + "'");
        auto t = table.numeric(*schema.time_column);
        if (schema.time_unit == "ms")
            for (double& x : t) x *= 1e-3;
        if (t.size() < 2) throw DataError(origin + ": need at least two samples");
        const double dt = (t.back() - t.front()) / static_cast<double>(t.size() - 1);
        if (!(dt > 0.0)) throw DataError(origin + ": time column must increase");
        for (std::size_t i = 1; i < t.size(); ++i)
            if (!(std::abs((t[i] - t[i - 1]) - dt) <= 0.01 * dt))
                throw DataError(origin + ": non-uniform sampling at row " + std::to_string(i + 1));
        trial.sample_rate_hz = 1.0 / dt;
        if (schema.sample_rate_hz && std::abs(*schema.sample_rate_hz - trial.sample_rate_hz) > 0.01 * trial.sample_rate_hz)
            throw DataError(origin + ": time column disagrees with declared sample rate");
    } else {
        trial.sample_rate_hz = *schema.sample_rate_hz;
    }

    for (const auto& req : schema.required) {
        if (!schema.channels.count(req)) throw DataError(origin + ": required channel '" + req + "' is not mapped");
    }
    for (const auto& [name, map] : schema.channels) {
        const bool required = std::find(schema.required.begin(), schema.required.end(), name) != schema.required.end();
        if (!table.has_column(map.column)) {
            if (required || schema.required.empty())
                throw DataError(origin + ": missing channel '" + name + "' (column '" + map.column + "')");
            continue;
        }
        const double f = unit_factor(name, map.unit, schema.body_mass);
        auto values = table.numeric(map.column);
        detail::fill_short_nan_runs(values, schema.max_nan_run, name);
        if (f != 1.0)
            for (double& v : values) v *= f;
        trial.channels[name] = std::move(values);
    }
    if (trial.channels.empty()) throw DataError(origin + ": no channels loaded");
    apply_offline_filters(trial, schema.filters_hz);
    return trial;
}

inline RawTrial load_trial(const std::string& path, const TrialSchema& schema) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    return load_trial(in, schema, path);
}

struct StrideRange {
    std::size_t begin = 0;  // heel-strike sample
    std::size_t end = 0;    // next same-side heel-strike sample (inclusive)
    double duration = 0.0;
    bool flagged = false;   // duration outside [0.4, 5] s
};

struct SegmentOptions {
    double threshold_bw = 0.05;  // fraction of body weight
    double debounce_s = 0.2;
    double min_stride_s = 0.4;
    double max_stride_s = 5.0;
};

/// Heel strikes at upward crossings of the vertical-GRF threshold. A crossing
/// only counts once the force has stayed below threshold for the debounce
/// time, so chatter around contact or toe-off yields one event per contact.
inline std::vector<std::size_t> grf_heel_strikes(std::span<const double> grf_n_per_kg, double sample_rate_hz,
                                                 const SegmentOptions& opt = {}) {
    const double threshold = opt.threshold_bw * kGravity;
    const auto debounce = static_cast<std::size_t>(std::ceil(opt.debounce_s * sample_rate_hz));
    std::vector<std::size_t> hs;
    std::size_t below = 0;
    bool armed = false;
    for (std::size_t i = 0; i < grf_n_per_kg.size(); ++i) {
        const bool above = grf_n_per_kg[i] > threshold;
        if (!above) {
            ++below;
            if (below >= debounce || i + 1 == below) armed = true;  // leading unloaded stretch also arms
            continue;
        }
        if (armed && i > 0) hs.push_back(i);
        armed = false;
        below = 0;
    }
    return hs;
}

inline std::vector<StrideRange> segment_strides(const RawTrial& trial, const SegmentOptions& opt = {}) {
    const auto& grf = trial.at(channel::grf_vertical);
    const auto hs = grf_heel_strikes(grf, trial.sample_rate_hz, opt);
    if (hs.size() < 2)
        throw DataError("segment_strides: found " + std::to_string(hs.size()) + " heel strikes, need at least 2");
    std::vector<StrideRange> out;
    for (std::size_t i = 0; i + 1 < hs.size(); ++i) {
        StrideRange r{hs[i], hs[i + 1], static_cast<double>(hs[i + 1] - hs[i]) / trial.sample_rate_hz, false};
        r.flagged = r.duration < opt.min_stride_s || r.duration > opt.max_stride_s;
        out.push_back(r);
    }
    return out;
}

/// Linear interpolation of samples [begin, end] onto n uniformly spaced points.
inline std::vector<double> resample_linear(std::span<const double> v, std::size_t begin, std::size_t end, std::size_t n) {
    std::vector<double> out(n);
    const double span = static_cast<double>(end - begin);
    for (std::size_t k = 0; k < n; ++k) {
        const double pos = span * static_cast<double>(k) / static_cast<double>(n - 1);
        const std::size_t i0 = std::min(begin + static_cast<std::size_t>(std::floor(pos)), end - 1);
        const double frac = pos - static_cast<double>(i0 - begin);
        out[k] = v[i0] + frac * (v[i0 + 1] - v[i0]);
    }
    out.front() = v[begin];
    out.back() = v[end];
    return out;
}

inline constexpr std::size_t kDefaultStrideSamples = 101;

inline StrideSeries normalize_stride(const RawTrial& trial, const StrideRange& range,
                                     std::size_t n_samples = kDefaultStrideSamples) {
    if (n_samples < 50) throw ContractError("normalize_stride: n_samples must be >= 50");
    if (!(range.end > range.begin) || range.end >= trial.size())
        throw ContractError("normalize_stride: range outside trial");
    StrideSeries s;
    if (trial.label) s.label = *trial.label;
    s.body_mass = trial.body_mass;
    s.cycle_duration = static_cast<double>(range.end - range.begin) / trial.sample_rate_hz;
    for (const auto& [name, v] : trial.channels) s.channels[name] = resample_linear(v, range.begin, range.end, n_samples);
    return s;
}

/// Writes `<path>` (CSV: percent_cycle + channels) and `<path>.meta.json`.
inline void write_stride(const std::string& path, const StrideSeries& s, const std::vector<std::string>& comments = {},
                         const std::optional<nlohmann::json>& provenance = std::nullopt) {
    s.validate();
    std::vector<double> pct(s.size());
    for (std::size_t i = 0; i < pct.size(); ++i)
        pct[i] = 100.0 * static_cast<double>(i) / static_cast<double>(pct.size() - 1);
    std::vector<std::string> names{"percent_cycle"};
    std::vector<const std::vector<double>*> cols{&pct};
    for (const auto& [name, v] : s.channels) {
        names.push_back(name);
        cols.push_back(&v);
    }
    {
        std::ofstream out(path);
        if (!out) throw Error("cannot write '" + path + "'");
        csv::write_comments(out, comments);
        csv::write_columns(out, names, cols);
    }
    nlohmann::json meta{{"task", to_string(s.label)},
                        {"body_mass", s.body_mass},
                        {"cycle_duration", s.cycle_duration},
                        {"n_samples", s.size()},
                        {"channels", std::vector<std::string>(names.begin() + 1, names.end())}};
    if (provenance) meta["provenance"] = *provenance;
    std::ofstream m(path + ".meta.json");
    if (!m) throw Error("cannot write '" + path + ".meta.json'");
    m << meta.dump(2) << '\n';
}

inline StrideSeries read_stride(const std::string& path) {
    const auto table = csv::read_file(path);
    std::ifstream m(path + ".meta.json");
    if (!m) throw DataError("missing stride metadata '" + path + ".meta.json'");
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(m);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path + ".meta.json: " + e.what());
    }
    StrideSeries s;
    try {
        s.label = parse_activity(meta.at("task").get<std::string>());
        s.body_mass = meta.at("body_mass").get<double>();
        s.cycle_duration = meta.at("cycle_duration").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path + ".meta.json: " + e.what());
    }
    for (const auto& name : table.header)
        if (name != "percent_cycle") s.channels[name] = table.numeric(name);
    s.validate();
    return s;
}

}  // namespace hipexo
