#pragma once

// JSON configuration for ControllerParams. Angles are radians; any angle key
// may instead be given with a "_deg" suffix and is converted on load. Files
// written here always use radians with round-trip precision.

#include <fstream>
#include <numbers>
#include <optional>
#include <string>

#include <json.hpp>

#include "hipexo/controller.hpp"
#include "hipexo/error.hpp"

namespace hipexo {

namespace detail {

using nlohmann::json;

inline constexpr double kDegToRad = std::numbers::pi / 180.0;

inline void read_number(const json& obj, const std::string& key, double& dst, const std::string& section) {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    if (!v.is_number()) throw ConfigError(section + "." + key + ": expected a number");
    dst = v.get<double>();
}

/// Angle or angular rate: accepts `key` (radians) or `key_deg` / `key_deg_s` (degrees).
inline void read_angle(const json& obj, const std::string& key, double& dst, const std::string& section,
                       const char* deg_suffix = "_deg") {
    const std::string deg_key = key + deg_suffix;
    if (obj.contains(key) && obj.contains(deg_key))
        throw ConfigError(section + ": both '" + key + "' and '" + deg_key + "' given");
    read_number(obj, key, dst, section);
    if (obj.contains(deg_key)) {
        double deg = 0.0;
        read_number(obj, deg_key, deg, section);
        dst = deg * kDegToRad;
    }
}

inline void read_sigmoid(const json& obj, const std::string& w_key, const std::string& phi_key, SigmoidParams& dst,
                         const std::string& section) {
    read_number(obj, w_key, dst.w, section);
    read_number(obj, phi_key, dst.phi, section);
}

inline const json* section(const json& root, const char* name) {
    if (!root.contains(name)) return nullptr;
    const auto& s = root.at(name);
    if (!s.is_object()) throw ConfigError(std::string(name) + ": expected an object");
    return &s;
}

}  // namespace detail

inline ControllerParams params_from_json(const nlohmann::json& root, ControllerParams base = {}) {
    using detail::read_angle;
    using detail::read_number;
    using detail::read_sigmoid;
    if (!root.is_object()) throw ConfigError("controller params: expected a JSON object");
    ControllerParams p = std::move(base);

    if (const auto* g = detail::section(root, "gait")) {
        read_number(*g, "k_ext", p.gait.k_ext, "gait");
        read_number(*g, "k_flex", p.gait.k_flex, "gait");
        read_angle(*g, "theta_ext_eq", p.gait.theta_ext_eq, "gait");
        read_angle(*g, "theta_flex_eq", p.gait.theta_flex_eq, "gait");
        read_sigmoid(*g, "w_ext", "phi_ext", p.gait.vel_mod_ext, "gait");
        read_sigmoid(*g, "w_flex", "phi_flex", p.gait.vel_mod_flex, "gait");
    }
    if (const auto* s = detail::section(root, "sts")) {
        read_number(*s, "k_sts", p.sts.k_sts, "sts");
        read_sigmoid(*s, "w_vel", "phi_vel", p.sts.vel_mod, "sts");
        read_sigmoid(*s, "w_torso", "phi_torso", p.sts.torso_mod, "sts");
    }
    if (const auto* d = detail::section(root, "descent")) {
        read_sigmoid(*d, "w_step", "phi_step", p.descent.step_mod, "descent");
        read_number(*d, "lambda", p.descent.lambda, "descent");
        read_angle(*d, "thigh_min", p.descent.thigh_min, "descent");
        read_angle(*d, "thigh_max", p.descent.thigh_max, "descent");
        read_number(*d, "t_wait", p.descent.t_wait, "descent");
        read_number(*d, "t_decay", p.descent.t_decay, "descent");
    }
    if (const auto* y = detail::section(root, "symmetry")) {
        read_sigmoid(*y, "w_sc", "phi_sc", p.symmetry.sym_mod, "symmetry");
        read_angle(*y, "vel_threshold", p.symmetry.vel_threshold, "symmetry", "_deg_s");
        read_angle(*y, "seated_ext_threshold", p.symmetry.seated_ext_threshold, "symmetry");
        read_number(*y, "ema_smoothing", p.symmetry.ema_smoothing, "symmetry");
        read_number(*y, "standing_beta", p.symmetry.standing_beta, "symmetry");
    }
    if (const auto* r = detail::section(root, "runtime")) {
        read_number(*r, "torque_limit", p.torque_limit, "runtime");
        read_number(*r, "loop_rate_hz", p.loop_rate_hz, "runtime");
        read_number(*r, "vel_filter_cutoff_hz", p.vel_filter_cutoff_hz, "runtime");
        read_number(*r, "cmd_filter_cutoff_hz", p.cmd_filter_cutoff_hz, "runtime");
        read_number(*r, "fault_hold_s", p.fault_hold_s, "runtime");
        read_number(*r, "fault_decay_s", p.fault_decay_s, "runtime");
        p.hs.sample_rate_hz = p.loop_rate_hz;
    }
    if (const auto* h = detail::section(root, "hs_detector")) {
        read_number(*h, "window_s", p.hs.window_s, "hs_detector");
        read_number(*h, "mad_k", p.hs.mad_k, "hs_detector");
        read_number(*h, "refractory_s", p.hs.refractory_s, "hs_detector");
        read_number(*h, "min_history_s", p.hs.min_history_s, "hs_detector");
        if (h->contains("confirm_samples")) {
            const auto& v = h->at("confirm_samples");
            if (!v.is_number_integer() || v.get<long long>() < 1)
                throw ConfigError("hs_detector.confirm_samples: expected a positive integer");
            p.hs.confirm_samples = v.get<std::size_t>();
        }
    }
    p.validate();
    return p;
}

inline nlohmann::json params_to_json(const ControllerParams& p) {
    nlohmann::json j;
    j["gait"] = {{"k_ext", p.gait.k_ext},
                 {"k_flex", p.gait.k_flex},
                 {"theta_ext_eq", p.gait.theta_ext_eq},
                 {"theta_flex_eq", p.gait.theta_flex_eq},
                 {"w_ext", p.gait.vel_mod_ext.w},
                 {"phi_ext", p.gait.vel_mod_ext.phi},
                 {"w_flex", p.gait.vel_mod_flex.w},
                 {"phi_flex", p.gait.vel_mod_flex.phi}};
    j["sts"] = {{"k_sts", p.sts.k_sts},
                {"w_vel", p.sts.vel_mod.w},
                {"phi_vel", p.sts.vel_mod.phi},
                {"w_torso", p.sts.torso_mod.w},
                {"phi_torso", p.sts.torso_mod.phi}};
    j["descent"] = {{"w_step", p.descent.step_mod.w},   {"phi_step", p.descent.step_mod.phi},
                    {"lambda", p.descent.lambda},       {"thigh_min", p.descent.thigh_min},
                    {"thigh_max", p.descent.thigh_max}, {"t_wait", p.descent.t_wait},
                    {"t_decay", p.descent.t_decay}};
    j["symmetry"] = {{"w_sc", p.symmetry.sym_mod.w},
                     {"phi_sc", p.symmetry.sym_mod.phi},
                     {"vel_threshold", p.symmetry.vel_threshold},
                     {"seated_ext_threshold", p.symmetry.seated_ext_threshold},
                     {"ema_smoothing", p.symmetry.ema_smoothing},
                     {"standing_beta", p.symmetry.standing_beta}};
    j["runtime"] = {{"torque_limit", p.torque_limit},
                    {"loop_rate_hz", p.loop_rate_hz},
                    {"vel_filter_cutoff_hz", p.vel_filter_cutoff_hz},
                    {"cmd_filter_cutoff_hz", p.cmd_filter_cutoff_hz},
                    {"fault_hold_s", p.fault_hold_s},
                    {"fault_decay_s", p.fault_decay_s}};
    j["hs_detector"] = {{"window_s", p.hs.window_s},
                        {"mad_k", p.hs.mad_k},
                        {"refractory_s", p.hs.refractory_s},
                        {"min_history_s", p.hs.min_history_s},
                        {"confirm_samples", p.hs.confirm_samples}};
    return j;
}

inline nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("'" + path + "': " + e.what());
    }
}

inline ControllerParams load_params(const std::string& path) { return params_from_json(read_json_file(path)); }

inline void save_params(const std::string& path, const ControllerParams& p,
                        const std::optional<nlohmann::json>& provenance = std::nullopt) {
    auto j = params_to_json(p);
    if (provenance) j["provenance"] = *provenance;
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    out << j.dump(2) << '\n';
}

}  // namespace hipexo
