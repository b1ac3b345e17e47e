#pragma once

// Outcome measures: cosine similarity, biological moment, joint power,
// positive work, peak power, ensemble statistics and the energetics report.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "hipexo/csv.hpp"
#include "hipexo/error.hpp"
#include "hipexo/gait_data.hpp"
#include "hipexo/signal.hpp"

namespace hipexo {

/// Cosine similarity in [-1, 1].
class SimScore {
public:
    explicit SimScore(double v) : value_(std::clamp(v, -1.0, 1.0)) {
        if (!std::isfinite(v)) throw DataError("similarity: undefined value");
    }
    double value() const { return value_; }

private:
    double value_;
};

inline SimScore cosine_similarity(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DataError("cosine_similarity: length mismatch");
    if (a.size() < 2) throw DataError("cosine_similarity: need at least two samples");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (!(na > 0.0) || !(nb > 0.0)) throw DataError("cosine_similarity: undefined for a zero-norm input");
    return SimScore(dot / (std::sqrt(na) * std::sqrt(nb)));
}

/// net - exo / mass, elementwise (Nm/kg).
inline std::vector<double> biological_moment(std::span<const double> net_moment, std::span<const double> exo_torque,
                                             double mass) {
    if (net_moment.size() != exo_torque.size()) throw DataError("biological_moment: length mismatch");
    if (!(mass > 0.0)) throw DataError("biological_moment: body mass must be positive");
    std::vector<double> out(net_moment.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = net_moment[i] - exo_torque[i] / mass;
    return out;
}

inline std::vector<double> joint_power(std::span<const double> moment, std::span<const double> velocity) {
    if (moment.size() != velocity.size()) throw DataError("joint_power: length mismatch");
    std::vector<double> out(moment.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = moment[i] * velocity[i];
    return out;
}

/// Positive work over one normalized cycle, dt = duration / (N - 1).
inline double positive_work(std::span<const double> power, double cycle_duration) {
    if (!(cycle_duration > 0.0)) throw ContractError("positive_work: cycle duration must be positive");
    if (power.empty()) throw DataError("positive_work: empty series");
    if (power.size() == 1) return 0.0;
    return integrate_positive(power, cycle_duration / static_cast<double>(power.size() - 1));
}

inline double peak_positive(std::span<const double> power) {
    if (power.empty()) throw DataError("peak_positive: empty series");
    return std::max(*std::max_element(power.begin(), power.end()), 0.0);
}

struct Ensemble {
    std::vector<double> mean;
    std::vector<double> sd;  // sample (n - 1) standard deviation
};

inline Ensemble ensemble_average(std::span<const std::vector<double>> series) {
    if (series.size() < 2) throw DataError("ensemble_average: need at least two series");
    const std::size_t n = series.front().size();
    for (const auto& s : series)
        if (s.size() != n) throw DataError("ensemble_average: grid mismatch");
    Ensemble e{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
    const double k = static_cast<double>(series.size());
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (const auto& s : series) sum += s[i];
        const double mean = sum / k;
        double ss = 0.0;
        for (const auto& s : series) ss += (s[i] - mean) * (s[i] - mean);
        e.mean[i] = mean;
        e.sd[i] = std::sqrt(ss / (k - 1.0));
    }
    return e;
}

inline Ensemble ensemble_average(std::span<const StrideSeries> strides, const std::string& channel_name) {
    std::vector<std::vector<double>> series;
    series.reserve(strides.size());
    for (const auto& s : strides) series.push_back(s.at(channel_name));
    return ensemble_average(series);
}

/// Hip power of one stride. Biological moment subtracts the exo torque channel when present.
struct StridePowers {
    std::vector<double> biological;
    std::vector<double> exo;
    std::vector<double> total;
};

inline StridePowers hip_powers(const StrideSeries& s) {
    const auto& net = s.at(channel::hip_moment);
    const auto& vel = s.at(channel::hip_velocity);
    std::vector<double> exo(net.size(), 0.0);
    if (s.has(channel::exo_torque)) exo = s.at(channel::exo_torque);
    StridePowers p;
    p.biological = joint_power(biological_moment(net, exo, s.body_mass), vel);
    std::vector<double> exo_moment(exo.size());
    for (std::size_t i = 0; i < exo.size(); ++i) exo_moment[i] = exo[i] / s.body_mass;
    p.exo = joint_power(exo_moment, vel);
    p.total.resize(p.biological.size());
    for (std::size_t i = 0; i < p.total.size(); ++i) p.total[i] = p.biological[i] + p.exo[i];
    return p;
}

struct StrideEnergetics {
    double hip_work = 0.0;
    double knee_work = 0.0;
    double ankle_work = 0.0;
    double lower_limb_work = 0.0;
    double peak_bio_hip_power = 0.0;
    double peak_total_hip_power = 0.0;
    bool has_knee_ankle = false;
};

inline StrideEnergetics stride_energetics(const StrideSeries& s) {
    StrideEnergetics e;
    const auto p = hip_powers(s);
    e.hip_work = positive_work(p.biological, s.cycle_duration);
    e.peak_bio_hip_power = peak_positive(p.biological);
    e.peak_total_hip_power = peak_positive(p.total);
    e.has_knee_ankle = s.has(channel::knee_moment) && s.has(channel::knee_velocity) &&
                       s.has(channel::ankle_moment) && s.has(channel::ankle_velocity);
    if (e.has_knee_ankle) {
        e.knee_work = positive_work(joint_power(s.at(channel::knee_moment), s.at(channel::knee_velocity)), s.cycle_duration);
        e.ankle_work =
            positive_work(joint_power(s.at(channel::ankle_moment), s.at(channel::ankle_velocity)), s.cycle_duration);
    }
    e.lower_limb_work = e.hip_work + e.knee_work + e.ankle_work;
    return e;
}

enum class Condition { unassisted, assisted };
inline std::string to_string(Condition c) { return c == Condition::assisted ? "assisted" : "unassisted"; }

struct EnergeticsRow {
    ActivityLabel task;
    Condition condition = Condition::unassisted;
    std::size_t strides = 0;
    double hip_work = 0.0;          // J/kg, mean over strides
    double lower_limb_work = 0.0;   // J/kg
    double peak_bio_hip_power = 0.0;    // W/kg, per-stride peaks then mean
    double peak_total_hip_power = 0.0;  // W/kg
    std::optional<double> mean_extension_scale;
    std::optional<double> sim;
    std::vector<double> per_stride_hip_work;
};

/// Aggregates per-stride outcomes for one task and condition.
inline EnergeticsRow energetics_row(std::span<const StrideSeries> strides, Condition cond) {
    if (strides.empty()) throw DataError("energetics: no strides");
    EnergeticsRow r;
    r.task = strides.front().label;
    r.condition = cond;
    r.strides = strides.size();
    for (const auto& s : strides) {
        if (!(s.label == r.task)) throw DataError("energetics: mixed tasks in one row");
        const auto e = stride_energetics(s);
        r.hip_work += e.hip_work;
        r.lower_limb_work += e.lower_limb_work;
        r.peak_bio_hip_power += e.peak_bio_hip_power;
        r.peak_total_hip_power += e.peak_total_hip_power;
        r.per_stride_hip_work.push_back(e.hip_work);
    }
    const double k = static_cast<double>(strides.size());
    r.hip_work /= k;
    r.lower_limb_work /= k;
    r.peak_bio_hip_power /= k;
    r.peak_total_hip_power /= k;
    return r;
}

/// (assisted - unassisted) / unassisted * 100; negative means a reduction.
inline double percent_change(double assisted, double unassisted) {
    if (unassisted == 0.0) return assisted == 0.0 ? 0.0 : std::numeric_limits<double>::quiet_NaN();
    return (assisted - unassisted) / unassisted * 100.0;
}

struct EnergeticsReport {
    std::vector<EnergeticsRow> rows;

    const EnergeticsRow* find(const ActivityLabel& task, Condition c) const {
        for (const auto& r : rows)
            if (r.task == task && r.condition == c) return &r;
        return nullptr;
    }

    static std::vector<std::string> columns() {
        return {"task",          "condition",           "strides",           "hip_positive_work",
                "lower_limb_positive_work", "peak_bio_hip_power", "peak_total_hip_power",
                "mean_extension_scale", "sim"};
    }

    void write_csv(std::ostream& out, const std::vector<std::string>& comments = {}) const {
        csv::write_comments(out, comments);
        const auto cols = columns();
        for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
        out << '\n';
        const auto opt = [](const std::optional<double>& v) { return v ? csv::format_double(*v) : std::string("nan"); };
        for (const auto& r : rows) {
            out << to_string(r.task) << ',' << to_string(r.condition) << ',' << r.strides << ','
                << csv::format_double(r.hip_work) << ',' << csv::format_double(r.lower_limb_work) << ','
                << csv::format_double(r.peak_bio_hip_power) << ',' << csv::format_double(r.peak_total_hip_power) << ','
                << opt(r.mean_extension_scale) << ',' << opt(r.sim) << '\n';
        }
    }

    nlohmann::json to_json() const {
        nlohmann::json rows_json = nlohmann::json::array();
        for (const auto& r : rows) {
            nlohmann::json j{{"task", to_string(r.task)},
                             {"condition", to_string(r.condition)},
                             {"strides", r.strides},
                             {"hip_positive_work", r.hip_work},
                             {"lower_limb_positive_work", r.lower_limb_work},
                             {"peak_bio_hip_power", r.peak_bio_hip_power},
                             {"peak_total_hip_power", r.peak_total_hip_power},
                             {"per_stride_hip_positive_work", r.per_stride_hip_work}};
            j["mean_extension_scale"] = r.mean_extension_scale ? nlohmann::json(*r.mean_extension_scale) : nlohmann::json();
            j["sim"] = r.sim ? nlohmann::json(*r.sim) : nlohmann::json();
            rows_json.push_back(std::move(j));
        }
        return {{"rows", rows_json}};
    }
};

struct PairedRow {
    ActivityLabel task;
    const EnergeticsRow* unassisted = nullptr;
    const EnergeticsRow* assisted = nullptr;
    double hip_work_change_pct = 0.0;
    double lower_limb_work_change_pct = 0.0;
    double peak_bio_change_pct = 0.0;
    double peak_total_change_pct = 0.0;
};

/// Pairs assisted and unassisted rows of the same task. Tasks present in only
/// one condition are reported back in `unmatched`.
inline std::vector<PairedRow> pair_conditions(const EnergeticsReport& report, std::vector<ActivityLabel>* unmatched) {
    std::vector<PairedRow> out;
    std::vector<ActivityLabel> tasks;
    for (const auto& r : report.rows)
        if (std::find(tasks.begin(), tasks.end(), r.task) == tasks.end()) tasks.push_back(r.task);
    for (const auto& t : tasks) {
        const auto* u = report.find(t, Condition::unassisted);
        const auto* a = report.find(t, Condition::assisted);
        if (!u || !a) {
            if (unmatched) unmatched->push_back(t);
            continue;
        }
        out.push_back({t, u, a, percent_change(a->hip_work, u->hip_work),
                       percent_change(a->lower_limb_work, u->lower_limb_work),
                       percent_change(a->peak_bio_hip_power, u->peak_bio_hip_power),
                       percent_change(a->peak_total_hip_power, u->peak_total_hip_power)});
    }
    return out;
}

inline void write_paired_csv(std::ostream& out, std::span<const PairedRow> rows,
                             const std::vector<std::string>& comments = {}) {
    csv::write_comments(out, comments);
    out << "task,hip_work_unassisted,hip_work_assisted,hip_work_change_pct,lower_limb_work_unassisted,"
           "lower_limb_work_assisted,lower_limb_work_change_pct,peak_bio_hip_power_unassisted,"
           "peak_bio_hip_power_assisted,peak_bio_change_pct,peak_total_hip_power_unassisted,"
           "peak_total_hip_power_assisted,peak_total_change_pct\n";
    using csv::format_double;
    for (const auto& r : rows) {
        out << to_string(r.task) << ',' << format_double(r.unassisted->hip_work) << ','
            << format_double(r.assisted->hip_work) << ',' << format_double(r.hip_work_change_pct) << ','
            << format_double(r.unassisted->lower_limb_work) << ',' << format_double(r.assisted->lower_limb_work) << ','
            << format_double(r.lower_limb_work_change_pct) << ',' << format_double(r.unassisted->peak_bio_hip_power)
            << ',' << format_double(r.assisted->peak_bio_hip_power) << ',' << format_double(r.peak_bio_change_pct)
            << ',' << format_double(r.unassisted->peak_total_hip_power) << ','
            << format_double(r.assisted->peak_total_hip_power) << ',' << format_double(r.peak_total_change_pct)
            << '\n';
    }
}

}  // namespace hipexo
