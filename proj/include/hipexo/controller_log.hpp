#pragma once

// Step logs. Column order is stable and documented in the README:
//
// frames:      timestamp, l_theta_thigh, l_theta_ips, l_theta_ips_dot,
//              r_theta_thigh, r_theta_ips, r_theta_ips_dot, theta_torso,
//              thigh_accel_normal_l, thigh_accel_normal_r, pelvis_accel
// breakdowns:  timestamp, fault, then for prefix l_ and r_:
//              hs, theta_ips_dot_filtered, tau_ext, tau_flex, tau_gait,
//              tau_gait_mod, tau_sts, tau_sts_mod, tau_act_raw, tau_cmd,
//              eta_ext, eta_flex, eta_sts_vel, eta_sts_torso, alpha, beta,
//              extension_scale
//
// Values use shortest round-trip formatting, so a log re-read from disk
// compares bit-exactly with the values that produced it.

#include <array>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "hipexo/controller.hpp"
#include "hipexo/csv.hpp"

namespace hipexo {

namespace detail {

struct SideField {
    const char* name;
    double SideBreakdown::*member;
};

inline constexpr std::array<SideField, 16> kSideFields{{
    {"theta_ips_dot_filtered", &SideBreakdown::theta_ips_dot_filtered},
    {"tau_ext", &SideBreakdown::tau_ext},
    {"tau_flex", &SideBreakdown::tau_flex},
    {"tau_gait", &SideBreakdown::tau_gait},
    {"tau_gait_mod", &SideBreakdown::tau_gait_mod},
    {"tau_sts", &SideBreakdown::tau_sts},
    {"tau_sts_mod", &SideBreakdown::tau_sts_mod},
    {"tau_act_raw", &SideBreakdown::tau_act_raw},
    {"tau_cmd", &SideBreakdown::tau_cmd},
    {"eta_ext", &SideBreakdown::eta_ext},
    {"eta_flex", &SideBreakdown::eta_flex},
    {"eta_sts_vel", &SideBreakdown::eta_sts_vel},
    {"eta_sts_torso", &SideBreakdown::eta_sts_torso},
    {"alpha", &SideBreakdown::alpha},
    {"beta", &SideBreakdown::beta},
    {"extension_scale", &SideBreakdown::extension_scale},
}};

inline constexpr std::array<const char*, 2> kSidePrefix{"l_", "r_"};

}  // namespace detail

inline std::vector<std::string> breakdown_columns() {
    std::vector<std::string> cols{"timestamp", "fault"};
    for (const char* pre : detail::kSidePrefix) {
        cols.push_back(std::string(pre) + "hs");
        for (const auto& f : detail::kSideFields) cols.push_back(std::string(pre) + f.name);
    }
    return cols;
}

inline std::vector<std::string> frame_columns() {
    return {"timestamp",     "l_theta_thigh", "l_theta_ips",          "l_theta_ips_dot",      "r_theta_thigh", "r_theta_ips",
            "r_theta_ips_dot", "theta_torso", "thigh_accel_normal_l", "thigh_accel_normal_r", "pelvis_accel"};
}

inline void write_breakdown_log(std::ostream& out, std::span<const TorqueBreakdown> log,
                                const std::vector<std::string>& comments = {}) {
    csv::write_comments(out, comments);
    const auto cols = breakdown_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << '\n';
    for (const auto& b : log) {
        out << csv::format_double(b.timestamp) << ',' << (b.fault ? 1 : 0);
        for (const auto& s : b.side) {
            out << ',' << (s.hs ? 1 : 0);
            for (const auto& f : detail::kSideFields) out << ',' << csv::format_double(s.*(f.member));
        }
        out << '\n';
    }
}

inline std::vector<TorqueBreakdown> read_breakdown_log(const csv::Table& t) {
    const auto cols = breakdown_columns();
    if (t.header != cols) throw DataError("breakdown log: unexpected column layout");
    std::vector<TorqueBreakdown> out;
    out.reserve(t.rows.size());
    for (const auto& row : t.rows) {
        TorqueBreakdown b;
        std::size_t c = 0;
        b.timestamp = csv::parse_double(row[c++]);
        b.fault = csv::parse_double(row[c++]) != 0.0;
        for (auto& s : b.side) {
            s.hs = csv::parse_double(row[c++]) != 0.0;
            for (const auto& f : detail::kSideFields) s.*(f.member) = csv::parse_double(row[c++]);
        }
        out.push_back(b);
    }
    return out;
}

inline void write_frame_log(std::ostream& out, std::span<const SensorFrame> frames,
                            const std::vector<std::string>& comments = {}) {
    csv::write_comments(out, comments);
    const auto cols = frame_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << '\n';
    using csv::format_double;
    for (const auto& f : frames) {
        out << format_double(f.timestamp);
        for (const auto& s : f.side)
            out << ',' << format_double(s.theta_thigh) << ',' << format_double(s.theta_ips) << ','
                << format_double(s.theta_ips_dot);
        out << ',' << format_double(f.theta_torso) << ',' << format_double(f.imu.thigh_accel_normal_l) << ','
            << format_double(f.imu.thigh_accel_normal_r) << ',' << format_double(f.imu.pelvis_accel) << '\n';
    }
}

/// Reads frames by column name; any subset ordering of the documented columns is accepted.
inline std::vector<SensorFrame> read_frame_log(const csv::Table& t) {
    for (const auto& c : frame_columns())
        if (!t.has_column(c)) throw DataError("frame log: missing channel '" + c + "'");
    const auto col = [&](const char* n) { return t.column(n); };
    const std::size_t ts = col("timestamp"), lth = col("l_theta_thigh"), lip = col("l_theta_ips"),
                      lid = col("l_theta_ips_dot"), rth = col("r_theta_thigh"), rip = col("r_theta_ips"),
                      rid = col("r_theta_ips_dot"), tor = col("theta_torso"), al = col("thigh_accel_normal_l"),
                      ar = col("thigh_accel_normal_r"), pa = col("pelvis_accel");
    std::vector<SensorFrame> out;
    out.reserve(t.rows.size());
    for (const auto& r : t.rows) {
        SensorFrame f;
        f.timestamp = csv::parse_double(r[ts]);
        f.side[0] = {csv::parse_double(r[lth]), csv::parse_double(r[lip]), csv::parse_double(r[lid])};
        f.side[1] = {csv::parse_double(r[rth]), csv::parse_double(r[rip]), csv::parse_double(r[rid])};
        f.theta_torso = csv::parse_double(r[tor]);
        f.imu = {csv::parse_double(r[al]), csv::parse_double(r[ar]), csv::parse_double(r[pa]), f.timestamp};
        out.push_back(f);
    }
    return out;
}

}  // namespace hipexo
