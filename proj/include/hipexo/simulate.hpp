#pragma once

// Closed-loop replay of normalized strides through the controller. Strides are
// re-timed to the loop rate, the contralateral side comes from the stride's
// contra channels, and a synthetic IMU places one acceleration spike per heel
// strike. Commanded torque is mapped back onto the stride grid as the
// exo_torque channel for the energetics pipeline.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "hipexo/controller.hpp"
#include "hipexo/error.hpp"
#include "hipexo/gait_data.hpp"

namespace hipexo {

struct ImuSynthOptions {
    double baseline = 0.25;               // thigh/pelvis oscillation amplitude, g
    double thigh_spike = 1.0;
    double thigh_spike_descent = 0.3;     // attenuated thigh impact during descent
    double pelvis_spike = 0.5;
    double pelvis_spike_descent = 1.0;
    double spike_width_s = 0.008;
    double noise = 0.01;
};

struct ReplayOptions {
    double loop_rate_hz = 250.0;
    std::size_t warmup_strides = 2;
    double sts_hold_s = 1.0;  // seated hold before and standing hold after a transition
    ImuSynthOptions imu;
};

struct StrideSpan {
    std::size_t begin = 0;  // frame index of the stride's first sample
    std::size_t end = 0;    // frame index of the next stride's first sample (inclusive end)
    std::size_t stride = 0;
};

struct ReplayStream {
    std::vector<SensorFrame> frames;
    std::array<std::vector<double>, 2> hs_truth;  // heel-strike timestamps per side
    std::vector<StrideSpan> spans;
};

namespace detail {

inline double sample_at(std::span<const double> v, double q) {
    const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(v.size() - 1);
    const std::size_t i0 = std::min(static_cast<std::size_t>(pos), v.size() - 2);
    const double frac = pos - static_cast<double>(i0);
    return v[i0] + frac * (v[i0 + 1] - v[i0]);
}

inline SensorFrame frame_at(const StrideSeries& s, double q, bool hold) {
    SensorFrame f;
    f.side[0] = {sample_at(s.at(channel::thigh_angle), q), sample_at(s.at(channel::hip_angle), q),
                 hold ? 0.0 : sample_at(s.at(channel::hip_velocity), q)};
    f.side[1] = {sample_at(s.at(channel::thigh_angle_contra), q), sample_at(s.at(channel::hip_angle_contra), q),
                 hold ? 0.0 : sample_at(s.at(channel::hip_velocity_contra), q)};
    f.theta_torso = sample_at(s.at(channel::torso_angle), q);
    return f;
}

inline double spike(double t, double center, double width) {
    const double z = (t - center) / width;
    return std::exp(-z * z);
}

inline double noise(std::mt19937_64& rng) { return 2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0; }

}  // namespace detail

/// Builds a replay stream from strides of one task. Gait strides are preceded
/// by `warmup_strides` copies of the first stride; sit-to-stand transitions are
/// bracketed by seated and standing holds. Timestamps are index / loop rate.
inline ReplayStream build_replay_stream(std::span<const StrideSeries> strides, const ReplayOptions& opt,
                                        std::uint64_t seed) {
    if (strides.empty()) throw DataError("replay: no strides");
    if (!(opt.loop_rate_hz > 0.0)) throw ConfigError("replay: loop rate must be positive");
    const double fs = opt.loop_rate_hz;
    const auto& im = opt.imu;
    std::mt19937_64 rng(seed);
    ReplayStream out;
    const auto push = [&](SensorFrame f) {
        f.timestamp = static_cast<double>(out.frames.size()) / fs;
        out.frames.push_back(f);
    };

    const bool sts = strides.front().label.kind == ActivityKind::sit_to_stand;
    if (sts) {
        const auto hold = static_cast<std::size_t>(std::lround(opt.sts_hold_s * fs));
        for (std::size_t k = 0; k < strides.size(); ++k) {
            const auto& s = strides[k];
            const auto n = std::max<std::size_t>(2, static_cast<std::size_t>(std::lround(s.cycle_duration * fs)));
            for (std::size_t j = 0; j < hold; ++j) push(detail::frame_at(s, 0.0, true));
            StrideSpan span{out.frames.size(), 0, k};
            for (std::size_t j = 0; j <= n; ++j) push(detail::frame_at(s, static_cast<double>(j) / n, false));
            span.end = out.frames.size() - 1;
            out.spans.push_back(span);
            for (std::size_t j = 0; j < hold; ++j) push(detail::frame_at(s, 1.0, true));
        }
        for (auto& f : out.frames) {
            f.imu = {im.noise * detail::noise(rng), im.noise * detail::noise(rng), im.noise * detail::noise(rng),
                     f.timestamp};
        }
        return out;
    }

    // Gait: stride phase per frame for each side, used for the IMU shapes.
    struct Phase {
        double q_left;
        bool descent;
    };
    std::vector<Phase> phase;
    std::vector<std::pair<std::size_t, bool>> order;  // (stride index, is warm-up)
    for (std::size_t w = 0; w < opt.warmup_strides; ++w) order.emplace_back(0, true);
    for (std::size_t k = 0; k < strides.size(); ++k) order.emplace_back(k, false);

    for (const auto& [k, warm] : order) {
        const auto& s = strides[k];
        const auto n = static_cast<std::size_t>(std::lround(s.cycle_duration * fs));
        if (n < 20) throw DataError("replay: stride too short for the loop rate");
        const std::size_t begin = out.frames.size();
        out.hs_truth[0].push_back(static_cast<double>(begin) / fs);
        out.hs_truth[1].push_back(static_cast<double>(begin + (n + 1) / 2) / fs);
        for (std::size_t j = 0; j < n; ++j) {
            const double q = static_cast<double>(j) / static_cast<double>(n);
            push(detail::frame_at(s, q, false));
            phase.push_back({q, s.label.is_descent()});
        }
        if (!warm) out.spans.push_back({begin, begin + n, k});
    }
    // Closing sample so the last stride has an inclusive end.
    push(detail::frame_at(strides.back(), 1.0, false));
    phase.push_back({1.0, strides.back().label.is_descent()});

    const double two_pi = 2.0 * std::numbers::pi;
    for (std::size_t i = 0; i < out.frames.size(); ++i) {
        auto& f = out.frames[i];
        const auto& ph = phase[i];
        double l = im.baseline * std::sin(two_pi * ph.q_left) + im.noise * detail::noise(rng);
        double r = im.baseline * std::sin(two_pi * (ph.q_left - 0.5)) + im.noise * detail::noise(rng);
        double p = im.baseline * std::sin(2.0 * two_pi * ph.q_left) + im.noise * detail::noise(rng);
        f.imu = {l, r, p, f.timestamp};
    }
    // Spikes are centered on the truth samples.
    const auto add_spikes = [&](std::size_t side) {
        for (double t_hs : out.hs_truth[side]) {
            const auto c = static_cast<std::size_t>(std::lround(t_hs * fs));
            if (c >= out.frames.size()) continue;
            const bool descent = phase[c].descent;
            const double thigh_amp = descent ? im.thigh_spike_descent : im.thigh_spike;
            const double pelvis_amp = descent ? im.pelvis_spike_descent : im.pelvis_spike;
            const auto reach = static_cast<std::ptrdiff_t>(std::ceil(4.0 * im.spike_width_s * fs));
            for (std::ptrdiff_t d = -reach; d <= reach; ++d) {
                const auto j = static_cast<std::ptrdiff_t>(c) + d;
                if (j < 0 || j >= static_cast<std::ptrdiff_t>(out.frames.size())) continue;
                auto& f = out.frames[static_cast<std::size_t>(j)];
                const double g = detail::spike(f.timestamp, t_hs, im.spike_width_s);
                (side == 0 ? f.imu.thigh_accel_normal_l : f.imu.thigh_accel_normal_r) += thigh_amp * g;
                f.imu.pelvis_accel += pelvis_amp * g;
            }
        }
    };
    add_spikes(0);
    add_spikes(1);
    return out;
}

/// Steps a fresh controller over the stream.
inline std::vector<TorqueBreakdown> replay(const ControllerParams& params, std::span<const SensorFrame> frames,
                                           std::optional<double> alpha_override = std::nullopt) {
    Controller c(params);
    c.set_alpha_override(alpha_override);
    std::vector<TorqueBreakdown> out;
    out.reserve(frames.size());
    for (const auto& f : frames) out.push_back(c.step(f));
    return out;
}

struct AssistedTask {
    std::vector<StrideSeries> strides;  // input strides with exo_torque added
    double mean_extension_scale = 1.0;
};

/// Left-side commanded torque over each stride span, resampled onto the
/// stride grid.
inline AssistedTask assisted_strides(std::span<const StrideSeries> strides, const ReplayStream& stream,
                                     std::span<const TorqueBreakdown> log) {
    if (log.size() != stream.frames.size()) throw ContractError("assisted_strides: log/stream length mismatch");
    AssistedTask out;
    std::vector<double> cmd(log.size());
    for (std::size_t i = 0; i < log.size(); ++i) cmd[i] = log[i].side[0].tau_cmd;
    double scale_sum = 0.0;
    std::size_t scale_n = 0;
    for (const auto& span : stream.spans) {
        StrideSeries s = strides[span.stride];
        s.channels[channel::exo_torque] = resample_linear(cmd, span.begin, span.end, s.size());
        for (std::size_t i = span.begin; i < span.end; ++i) {
            scale_sum += log[i].side[0].extension_scale;
            ++scale_n;
        }
        out.strides.push_back(std::move(s));
    }
    if (scale_n) out.mean_extension_scale = scale_sum / static_cast<double>(scale_n);
    return out;
}

// ---------------------------------------------------------------------------
// Standalone IMU stream with known heel strikes: one impulse per side per step
// period, sides offset by half a period, thighs flexed most at their own
// heel strike.

struct HsStreamSpec {
    double duration_s = 60.5;
    double sample_rate_hz = 250.0;
    double step_period_s = 1.0;  // same-side impulse spacing
    double first_event_s = 0.75;
    double thigh_spike = 1.0;
    double pelvis_spike = 0.5;
    double thigh_mean = 0.2;
    double thigh_amplitude = 0.3;
    ImuSynthOptions imu;
};

/// Descent-like ablation: thigh impacts at 30% amplitude, strong pelvis spikes.
inline HsStreamSpec descent_ablation(HsStreamSpec spec) {
    spec.thigh_spike = spec.imu.thigh_spike_descent;
    spec.pelvis_spike = spec.imu.pelvis_spike_descent;
    return spec;
}

inline ReplayStream synth_hs_stream(const HsStreamSpec& spec, std::uint64_t seed) {
    if (!(spec.sample_rate_hz > 0.0) || !(spec.step_period_s > 0.0) || !(spec.duration_s >= 0.0))
        throw ConfigError("hs stream: rate, period and duration must be positive");
    const double fs = spec.sample_rate_hz;
    const auto n = static_cast<std::size_t>(std::floor(spec.duration_s * fs));
    const double two_pi = 2.0 * std::numbers::pi;
    const double half = spec.step_period_s / 2.0;
    std::mt19937_64 rng(seed);
    ReplayStream out;
    out.frames.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto& f = out.frames[i];
        f.timestamp = static_cast<double>(i) / fs;
        const double ph = (f.timestamp - spec.first_event_s) / spec.step_period_s;
        f.side[0].theta_thigh = spec.thigh_mean + spec.thigh_amplitude * std::cos(two_pi * ph);
        f.side[1].theta_thigh = spec.thigh_mean + spec.thigh_amplitude * std::cos(two_pi * (ph - 0.5));
        f.side[0].theta_ips = f.side[0].theta_thigh;
        f.side[1].theta_ips = f.side[1].theta_thigh;
        f.imu = {spec.imu.baseline * std::sin(two_pi * ph) + spec.imu.noise * detail::noise(rng),
                 spec.imu.baseline * std::sin(two_pi * (ph - 0.5)) + spec.imu.noise * detail::noise(rng),
                 spec.imu.baseline * std::sin(2.0 * two_pi * ph) + spec.imu.noise * detail::noise(rng), f.timestamp};
    }
    for (std::size_t side = 0; side < 2; ++side) {
        for (double t = spec.first_event_s + static_cast<double>(side) * half; t < spec.duration_s;
             t += spec.step_period_s) {
            const auto c = static_cast<std::size_t>(std::lround(t * fs));
            if (c >= n) break;
            const double t_hs = static_cast<double>(c) / fs;
            out.hs_truth[side].push_back(t_hs);
            const auto reach = static_cast<std::ptrdiff_t>(std::ceil(4.0 * spec.imu.spike_width_s * fs));
            for (std::ptrdiff_t d = -reach; d <= reach; ++d) {
                const auto j = static_cast<std::ptrdiff_t>(c) + d;
                if (j < 0 || j >= static_cast<std::ptrdiff_t>(n)) continue;
                auto& f = out.frames[static_cast<std::size_t>(j)];
                const double g = detail::spike(f.timestamp, t_hs, spec.imu.spike_width_s);
                (side == 0 ? f.imu.thigh_accel_normal_l : f.imu.thigh_accel_normal_r) += spec.thigh_spike * g;
                f.imu.pelvis_accel += spec.pelvis_spike * g;
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Heel-strike evaluation against ground truth.

struct HsScore {
    std::size_t truth = 0;
    std::size_t detected = 0;
    std::size_t matched = 0;
    double max_timing_error = 0.0;  // seconds, over matched events
    double precision() const { return detected ? static_cast<double>(matched) / static_cast<double>(detected) : 0.0; }
    double recall() const { return truth ? static_cast<double>(matched) / static_cast<double>(truth) : 0.0; }
};

/// Greedy one-to-one matching per side within `tolerance_s`. Truth and
/// detections before `from_s` (detector warm-up) are ignored.
inline HsScore score_heel_strikes(const std::array<std::vector<double>, 2>& truth, std::span<const HsEvent> events,
                                  double tolerance_s, double from_s = 0.0) {
    HsScore sc;
    for (const auto& ev : events)
        if (ev.timestamp >= from_s - tolerance_s) ++sc.detected;
    for (std::size_t side = 0; side < 2; ++side) {
        std::vector<double> t;
        for (double v : truth[side])
            if (v >= from_s) t.push_back(v);
        sc.truth += t.size();
        std::vector<bool> used(t.size(), false);
        for (const auto& ev : events) {
            if (index(ev.side) != side || ev.timestamp < from_s - tolerance_s) continue;
            std::optional<std::size_t> best;
            for (std::size_t k = 0; k < t.size(); ++k) {
                if (used[k]) continue;
                const double e = std::abs(t[k] - ev.timestamp);
                if (e <= tolerance_s && (!best || e < std::abs(t[*best] - ev.timestamp))) best = k;
            }
            if (best) {
                used[*best] = true;
                ++sc.matched;
                sc.max_timing_error = std::max(sc.max_timing_error, std::abs(t[*best] - ev.timestamp));
            }
        }
    }
    return sc;
}

/// Runs a standalone detector over the stream's IMU channels.
inline std::vector<HsEvent> detect_heel_strikes(const HsDetectorConfig& cfg, std::span<const SensorFrame> frames) {
    HsDetector det(cfg);
    std::vector<HsEvent> out;
    for (const auto& f : frames) {
        const auto b = BilateralSample::from_thighs(f.side[0].theta_thigh, f.side[1].theta_thigh, 0.0, f.timestamp);
        ImuFrame imu = f.imu;
        imu.timestamp = f.timestamp;
        for (const auto& ev : det.step(imu, b)) out.push_back(ev);
    }
    return out;
}

}  // namespace hipexo
