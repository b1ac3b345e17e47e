#pragma once

// Synthetic multi-activity stride profiles, used when no normative dataset is
// on disk. Gait kinematics are two-harmonic thigh trajectories with a small
// torso lean; the contralateral side is the same stride shifted by half a
// cycle. Hip moments for level walking and ascent follow a velocity-modulated
// spring reference plus a smooth residual (the hip behaves spring-like in
// these tasks); descent moments are dominated by an early-stance braking burst
// that no single spring setting reproduces. Sit-to-stand is one transition
// from a seated thigh angle to upright with a forward torso lean at onset.
//
// All values are illustrative; they are not fitted to any recorded dataset.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "hipexo/basis.hpp"
#include "hipexo/gait_data.hpp"

namespace hipexo {

/// Fraction of the biological moment (times body mass) the reference torque represents.
inline constexpr double kSyntheticAssistFraction = 0.2;
inline constexpr double kSyntheticBodyMass = 70.0;

/// Spring settings the generator uses to shape level/ascent hip moments.
inline GaitSpringParams synthetic_reference_gait() {
    GaitSpringParams p;
    p.k_ext = 40.0;
    p.k_flex = 30.0;
    p.theta_ext_eq = 0.55;
    p.theta_flex_eq = 0.25;
    p.vel_mod_ext = {-5.0, 4.0};
    p.vel_mod_flex = {5.0, 4.0};
    return p;
}

inline StsSpringParams synthetic_reference_sts() { return StsSpringParams{}; }

struct GaitShape {
    double thigh_mean;
    double thigh_amplitude;
    double cycle_duration;
    double torso_lean;
    double moment_gain;
};

namespace detail {

inline GaitShape lerp(const GaitShape& a, const GaitShape& b, double t) {
    const auto l = [t](double x, double y) { return x + t * (y - x); };
    return {l(a.thigh_mean, b.thigh_mean), l(a.thigh_amplitude, b.thigh_amplitude),
            l(a.cycle_duration, b.cycle_duration), l(a.torso_lean, b.torso_lean), l(a.moment_gain, b.moment_gain)};
}

/// Two anchor conditions per gait kind; other parameters interpolate linearly.
inline GaitShape gait_shape(const ActivityLabel& label) {
    struct Anchors {
        double p0, p1;
        GaitShape s0, s1;
    };
    Anchors a{};
    switch (label.kind) {
        case ActivityKind::level_walk: a = {0.85, 1.15, {0.15, 0.33, 1.20, 0.05, 1.0}, {0.17, 0.37, 1.05, 0.05, 1.15}}; break;
        case ActivityKind::ramp_ascent: a = {5.2, 11.0, {0.25, 0.36, 1.15, 0.10, 1.25}, {0.33, 0.38, 1.20, 0.12, 1.45}}; break;
        case ActivityKind::stair_ascent: a = {5.0, 7.0, {0.45, 0.40, 1.40, 0.15, 1.6}, {0.50, 0.42, 1.50, 0.17, 1.8}}; break;
        case ActivityKind::ramp_descent: a = {5.2, 11.0, {0.08, 0.21, 1.10, 0.00, 1.0}, {0.06, 0.19, 1.10, -0.02, 1.1}}; break;
        case ActivityKind::stair_descent: a = {5.0, 7.0, {0.15, 0.18, 1.30, 0.02, 1.0}, {0.17, 0.17, 1.35, 0.03, 1.1}}; break;
        case ActivityKind::sit_to_stand: throw ContractError("gait_shape: sit-to-stand has no gait shape");
    }
    return lerp(a.s0, a.s1, (label.parameter - a.p0) / (a.p1 - a.p0));
}

inline double gauss(double x, double c, double w) { return std::exp(-((x - c) / w) * ((x - c) / w)); }
inline double gauss_d(double x, double c, double w) { return -2.0 * (x - c) / (w * w) * gauss(x, c, w); }

/// Deterministic uniform draw in [-1, 1] independent of standard-library distribution details.
inline double unit_jitter(std::mt19937_64& rng) {
    return 2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0;
}

struct ThighTrajectory {
    double mean, amplitude, harmonic;
    double angle(double q) const {
        return mean + amplitude * std::cos(2.0 * std::numbers::pi * (q - 0.9)) +
               harmonic * std::cos(4.0 * std::numbers::pi * (q - 0.15));
    }
    /// d(angle)/d(cycle fraction)
    double rate(double q) const {
        return -2.0 * std::numbers::pi * amplitude * std::sin(2.0 * std::numbers::pi * (q - 0.9)) -
               4.0 * std::numbers::pi * harmonic * std::sin(4.0 * std::numbers::pi * (q - 0.15));
    }
};

inline StrideSeries synth_gait(const ActivityLabel& label, std::uint64_t seed, std::size_t n) {
    std::mt19937_64 rng(seed ^ (0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(label.kind) + 1)));
    GaitShape shape = gait_shape(label);
    shape.thigh_amplitude *= 1.0 + 0.04 * unit_jitter(rng);
    shape.thigh_mean += 0.01 * unit_jitter(rng);
    shape.cycle_duration *= 1.0 + 0.03 * unit_jitter(rng);
    shape.moment_gain *= 1.0 + 0.05 * unit_jitter(rng);
    const double residual_phase = 0.2 + 0.05 * unit_jitter(rng);

    const ThighTrajectory thigh{shape.thigh_mean, shape.thigh_amplitude, 0.04};
    const double T = shape.cycle_duration;
    const double two_pi = 2.0 * std::numbers::pi;
    const auto torso = [&](double q) { return shape.torso_lean + 0.02 * std::sin(2.0 * two_pi * q); };
    const auto torso_rate = [&](double q) { return 0.02 * 2.0 * two_pi * std::cos(2.0 * two_pi * q); };

    StrideSeries s;
    s.label = label;
    s.body_mass = kSyntheticBodyMass;
    s.cycle_duration = T;
    auto& c = s.channels;
    for (const char* name : {channel::hip_angle, channel::hip_velocity, channel::hip_angle_contra,
                             channel::hip_velocity_contra, channel::thigh_angle, channel::thigh_angle_contra,
                             channel::torso_angle, channel::hip_moment, channel::knee_moment, channel::knee_velocity,
                             channel::ankle_moment, channel::ankle_velocity, channel::grf_vertical})
        c[name].resize(n);

    const auto ref = synthetic_reference_gait();
    const double to_moment = 1.0 / (kSyntheticBodyMass * kSyntheticAssistFraction);
    std::vector<double> spring(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double q = static_cast<double>(i) / static_cast<double>(n - 1);
        const double qc = q + 0.5;
        c[channel::thigh_angle][i] = thigh.angle(q);
        c[channel::thigh_angle_contra][i] = thigh.angle(qc);
        c[channel::torso_angle][i] = torso(q);
        c[channel::hip_angle][i] = thigh.angle(q) + torso(q);
        c[channel::hip_velocity][i] = (thigh.rate(q) + torso_rate(q)) / T;
        c[channel::hip_angle_contra][i] = thigh.angle(qc) + torso(q);
        c[channel::hip_velocity_contra][i] = (thigh.rate(qc) + torso_rate(q)) / T;
        const JointSample js{c[channel::hip_angle][i], c[channel::hip_velocity][i], c[channel::thigh_angle][i],
                             c[channel::torso_angle][i]};
        spring[i] = gait_torque(js, ref) * to_moment;

        // Knee: stance flexion/extension moment, swing flexion. Ankle: push-off.
        const double knee_angle_rate = 0.25 * gauss_d(q, 0.15, 0.08) + 0.6 * gauss_d(q, 0.72, 0.12);
        c[channel::knee_velocity][i] = knee_angle_rate / T;
        c[channel::knee_moment][i] = 0.45 * gauss(q, 0.12, 0.07) - 0.25 * gauss(q, 0.4, 0.1) - 0.15 * gauss(q, 0.95, 0.05);
        const double ankle_rate = -0.35 * gauss_d(q, 0.6, 0.07) + 0.25 * gauss_d(q, 0.45, 0.2);
        c[channel::ankle_velocity][i] = ankle_rate / T;
        c[channel::ankle_moment][i] = -1.4 * gauss(q, 0.48, 0.12);
        c[channel::grf_vertical][i] =
            q < 0.6 ? kGravity * (std::sin(std::numbers::pi * q / 0.6) * 0.9 + 0.25 * gauss(q, 0.12, 0.05) +
                                  0.25 * gauss(q, 0.48, 0.05))
                    : 0.0;
    }
    double rms = 0.0;
    for (double v : spring) rms += v * v;
    rms = std::sqrt(rms / static_cast<double>(n));

    for (std::size_t i = 0; i < n; ++i) {
        const double q = static_cast<double>(i) / static_cast<double>(n - 1);
        double m = 0.0;
        if (label.is_descent()) {
            m = 0.15 * spring[i] - 0.30 * gauss(q, 0.12, 0.09) + 0.30 * gauss(q, 0.52, 0.1) -
                0.12 * gauss(q, 0.93, 0.06);
        } else {
            m = spring[i] + 0.22 * rms * std::sin(two_pi * (3.0 * q + residual_phase));
        }
        c[channel::hip_moment][i] = shape.moment_gain * m;
    }
    return s;
}

inline StrideSeries synth_sts(std::uint64_t seed, std::size_t n) {
    std::mt19937_64 rng(seed ^ 0x5157u);
    const double T = 1.6 * (1.0 + 0.05 * unit_jitter(rng));
    const double seated = 1.4 + 0.03 * unit_jitter(rng);
    const double lean = 0.45 * (1.0 + 0.05 * unit_jitter(rng));
    const double asym = 0.02 * unit_jitter(rng);

    StrideSeries s;
    s.label = ActivityLabel{ActivityKind::sit_to_stand, 0.0};
    s.body_mass = kSyntheticBodyMass;
    s.cycle_duration = T;
    auto& c = s.channels;
    for (const char* name : {channel::hip_angle, channel::hip_velocity, channel::hip_angle_contra,
                             channel::hip_velocity_contra, channel::thigh_angle, channel::thigh_angle_contra,
                             channel::torso_angle, channel::hip_moment, channel::knee_moment, channel::knee_velocity,
                             channel::ankle_moment, channel::ankle_velocity, channel::grf_vertical})
        c[name].resize(n);

    const auto ref = synthetic_reference_sts();
    const double to_moment = 1.0 / (kSyntheticBodyMass * kSyntheticAssistFraction);
    std::vector<double> spring(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double q = static_cast<double>(i) / static_cast<double>(n - 1);
        // Thigh falls from seated to upright along a smoothstep starting after the lean.
        const double u = std::clamp((q - 0.15) / 0.75, 0.0, 1.0);
        const double step = u * u * (3.0 - 2.0 * u);
        const double step_rate = (q > 0.15 && q < 0.9) ? 6.0 * u * (1.0 - u) / 0.75 : 0.0;
        const double thigh = seated * (1.0 - step);
        const double thigh_rate = -seated * step_rate;
        const double torso = 0.05 + lean * gauss(q, 0.3, 0.17);
        const double torso_rate = lean * gauss_d(q, 0.3, 0.17);

        c[channel::thigh_angle][i] = thigh;
        c[channel::thigh_angle_contra][i] = thigh * (1.0 + asym);
        c[channel::torso_angle][i] = torso;
        c[channel::hip_angle][i] = thigh + torso;
        c[channel::hip_velocity][i] = (thigh_rate + torso_rate) / T;
        c[channel::hip_angle_contra][i] = thigh * (1.0 + asym) + torso;
        c[channel::hip_velocity_contra][i] = (thigh_rate * (1.0 + asym) + torso_rate) / T;
        const JointSample js{thigh + torso, (thigh_rate + torso_rate) / T, thigh, torso};
        spring[i] = sts_modulated_torque(js, ref) * to_moment;

        c[channel::knee_velocity][i] = -1.5 * step_rate / T;
        c[channel::knee_moment][i] = 0.9 * gauss(q, 0.45, 0.18);
        c[channel::ankle_velocity][i] = -0.2 * gauss_d(q, 0.4, 0.2) / T;
        c[channel::ankle_moment][i] = -0.4 * gauss(q, 0.5, 0.25);
        c[channel::grf_vertical][i] = kGravity * (0.3 + 0.7 * step);
    }
    double rms = 0.0;
    for (double v : spring) rms += v * v;
    rms = std::sqrt(rms / static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const double q = static_cast<double>(i) / static_cast<double>(n - 1);
        c[channel::hip_moment][i] = 1.5 * (spring[i] - 0.15 * rms * gauss(q, 0.75, 0.12));
    }
    return s;
}

}  // namespace detail

/// One synthetic stride (or transition) for `label`; `seed` drives the
/// inter-stride jitter. Same inputs give identical series.
inline StrideSeries synth_profiles(const ActivityLabel& label, std::uint64_t seed,
                                   std::size_t n_samples = kDefaultStrideSamples) {
    label.validate();
    if (n_samples < 50) throw ContractError("synth_profiles: n_samples must be >= 50");
    if (label.kind == ActivityKind::sit_to_stand) return detail::synth_sts(seed, n_samples);
    return detail::synth_gait(label, seed, n_samples);
}

/// The ten gait conditions of the in-silico task battery plus sit-to-stand.
inline std::vector<ActivityLabel> standard_battery_labels() {
    using K = ActivityKind;
    return {{K::level_walk, 0.85},   {K::level_walk, 1.15},   {K::ramp_ascent, 5.2}, {K::ramp_ascent, 11.0},
            {K::stair_ascent, 5.0},  {K::stair_ascent, 7.0},  {K::ramp_descent, 5.2}, {K::ramp_descent, 11.0},
            {K::stair_descent, 5.0}, {K::stair_descent, 7.0}, {K::sit_to_stand, 0.0}};
}

/// Default activity weights: ascent and sit-to-stand 2, level 1, descent 0.25.
inline double default_task_weight(const ActivityLabel& l) {
    switch (l.kind) {
        case ActivityKind::ramp_ascent:
        case ActivityKind::stair_ascent:
        case ActivityKind::sit_to_stand: return 2.0;
        case ActivityKind::level_walk: return 1.0;
        case ActivityKind::ramp_descent:
        case ActivityKind::stair_descent: return 0.25;
    }
    return 1.0;
}

inline std::vector<StrideSeries> synth_strides(const ActivityLabel& label, std::uint64_t seed, std::size_t count,
                                               std::size_t n_samples = kDefaultStrideSamples) {
    std::vector<StrideSeries> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) out.push_back(synth_profiles(label, seed * 1000003ULL + i, n_samples));
    return out;
}

}  // namespace hipexo
