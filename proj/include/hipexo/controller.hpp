#pragma once

// Fixed-rate bilateral controller. Per step:
//   hip velocity low-pass -> spring bases -> heel-strike detection / alpha latch
//   -> extension attenuation -> symmetry factor and blend -> command low-pass
//   -> symmetric clamp at the torque limit.

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "hipexo/basis.hpp"
#include "hipexo/error.hpp"
#include "hipexo/hs_detect.hpp"
#include "hipexo/modulation.hpp"
#include "hipexo/signal.hpp"

namespace hipexo {

struct ControllerParams {
    GaitSpringParams gait;
    StsSpringParams sts;
    DescentModParams descent;
    SymmetryParams symmetry;
    HsDetectorConfig hs;
    double torque_limit = 22.0;
    double loop_rate_hz = 250.0;
    double vel_filter_cutoff_hz = 10.0;
    double cmd_filter_cutoff_hz = 5.0;
    double fault_hold_s = 0.1;   // hold the last command this long on bad frames
    double fault_decay_s = 0.2;  // then ramp it to zero over this long

    void validate() const {
        gait.validate();
        sts.validate();
        descent.validate();
        symmetry.validate();
        hs.validate();
        if (!(torque_limit > 0.0)) throw ConfigError("controller: torque limit must be positive");
        if (!(loop_rate_hz > 0.0)) throw ConfigError("controller: loop rate must be positive");
        if (!(vel_filter_cutoff_hz > 0.0 && vel_filter_cutoff_hz < loop_rate_hz / 2.0) ||
            !(cmd_filter_cutoff_hz > 0.0 && cmd_filter_cutoff_hz < loop_rate_hz / 2.0))
            throw ConfigError("controller: filter cutoffs must lie in (0, loop_rate / 2)");
        if (!(fault_hold_s >= 0.0) || !(fault_decay_s > 0.0))
            throw ConfigError("controller: fault hold must be >= 0 and fault decay > 0");
        if (std::abs(hs.sample_rate_hz - loop_rate_hz) > 1e-9)
            throw ConfigError("controller: heel-strike detector rate must equal the loop rate");
    }
};

struct SideSensors {
    double theta_thigh = 0.0;
    double theta_ips = 0.0;
    double theta_ips_dot = 0.0;
};

struct SensorFrame {
    double timestamp = 0.0;
    std::array<SideSensors, 2> side{};  // indexed by Side
    double theta_torso = 0.0;
    ImuFrame imu;

    bool finite() const {
        if (!std::isfinite(timestamp) || !std::isfinite(theta_torso) || !imu.finite()) return false;
        for (const auto& s : side)
            if (!std::isfinite(s.theta_thigh) || !std::isfinite(s.theta_ips) || !std::isfinite(s.theta_ips_dot))
                return false;
        return true;
    }
};

struct SideBreakdown {
    double theta_ips_dot_filtered = 0.0;
    double tau_ext = 0.0;
    double tau_flex = 0.0;
    double tau_gait = 0.0;
    double tau_gait_mod = 0.0;
    double tau_sts = 0.0;
    double tau_sts_mod = 0.0;
    double tau_act_raw = 0.0;
    double tau_cmd = 0.0;
    double eta_ext = 0.0;
    double eta_flex = 0.0;
    double eta_sts_vel = 0.0;
    double eta_sts_torso = 0.0;
    double alpha = 0.0;
    double beta = 0.0;
    double extension_scale = 1.0;
    bool hs = false;

    bool operator==(const SideBreakdown&) const = default;
};

struct TorqueBreakdown {
    double timestamp = 0.0;
    bool fault = false;
    std::array<SideBreakdown, 2> side{};

    const SideBreakdown& operator[](Side s) const { return side[index(s)]; }
    bool operator==(const TorqueBreakdown&) const = default;
};

class Controller {
public:
    explicit Controller(ControllerParams params) : params_(std::move(params)), detector_(params_.hs) {
        params_.validate();
        reset();
    }

    const ControllerParams& params() const { return params_; }

    /// Clears filters, modulation state, detector state and fault bookkeeping.
    void reset() {
        const BiquadSpec vel{params_.vel_filter_cutoff_hz, params_.loop_rate_hz};
        const BiquadSpec cmd{params_.cmd_filter_cutoff_hz, params_.loop_rate_hz};
        for (std::size_t i = 0; i < 2; ++i) {
            vel_filter_[i] = LowpassFilter(vel);
            cmd_filter_[i] = LowpassFilter(cmd);
            modulation_[i] = ModulationState{};
        }
        detector_.reset();
        last_ = TorqueBreakdown{};
        last_timestamp_.reset();
        fault_since_.reset();
        held_cmd_ = {0.0, 0.0};
    }

    /// Forces alpha on both sides (ablation replays). nullopt restores normal behavior.
    void set_alpha_override(std::optional<double> alpha) { alpha_override_ = alpha; }

    const ModulationState& modulation(Side s) const { return modulation_[index(s)]; }

    TorqueBreakdown step(const SensorFrame& frame) {
        if (!std::isfinite(frame.timestamp)) return fault_step(frame.timestamp);
        if (last_timestamp_ && !(frame.timestamp > *last_timestamp_))
            throw StreamError("controller: timestamp regression at t=" + std::to_string(frame.timestamp));
        if (!frame.finite()) {
            last_timestamp_ = frame.timestamp;
            return fault_step(frame.timestamp);
        }
        last_timestamp_ = frame.timestamp;
        fault_since_.reset();

        TorqueBreakdown out;
        out.timestamp = frame.timestamp;

        std::array<double, 2> vel{};
        for (std::size_t i = 0; i < 2; ++i) vel[i] = vel_filter_[i].step(frame.side[i].theta_ips_dot);

        // Hip angle = thigh angle + torso lean on each side, so the difference of
        // hip velocities equals the inter-thigh velocity difference.
        const auto bilateral = BilateralSample::from_thighs(frame.side[0].theta_thigh, frame.side[1].theta_thigh,
                                                            vel[0] - vel[1], frame.timestamp);

        for (const HsEvent& ev : detector_.step(frame.imu, bilateral)) {
            latch_alpha(modulation_[index(ev.side)], alpha_at_heelstrike(ev.thigh_snapshot, params_.descent));
            out.side[index(ev.side)].hs = true;
        }

        const double beta_in = beta_raw(bilateral, params_.symmetry);

        for (std::size_t i = 0; i < 2; ++i) {
            auto& st = modulation_[i];
            auto& b = out.side[i];
            b.theta_ips_dot_filtered = vel[i];

            const JointSample js{frame.side[i].theta_ips, vel[i], frame.side[i].theta_thigh, frame.theta_torso};
            const auto springs = gait_spring_torques(js, params_.gait);
            const auto eta = gait_velocity_factors(js, params_.gait);
            const auto sf = sts_factors(js, params_.sts);
            b.tau_ext = springs.ext;
            b.tau_flex = springs.flex;
            b.eta_ext = eta.ext;
            b.eta_flex = eta.flex;
            b.tau_gait = gait_torque(springs, eta);
            b.tau_sts = sts_spring_torque(js, params_.sts);
            b.eta_sts_vel = sf.velocity;
            b.eta_sts_torso = sf.torso;
            b.tau_sts_mod = sts_modulated_torque(b.tau_sts, sf);

            const double beta = beta_smoothed(st, beta_in, params_.symmetry.ema_smoothing);
            reset_tick(st, is_standing(st, params_.symmetry), frame.timestamp, params_.descent);
            if (alpha_override_) st.alpha = std::clamp(*alpha_override_, 0.0, 1.0);

            b.alpha = st.alpha;
            b.beta = beta;
            b.extension_scale = extension_scale(st.alpha, params_.descent);
            b.tau_gait_mod = attenuate_extension(b.tau_gait, st.alpha, params_.descent);
            b.tau_act_raw = blend(b.tau_sts_mod, b.tau_gait_mod, beta);

            const double filtered = cmd_filter_[i].step(b.tau_act_raw);
            b.tau_cmd = std::clamp(filtered, -params_.torque_limit, params_.torque_limit);
            held_cmd_[i] = b.tau_cmd;
        }

        last_ = out;
        return out;
    }

private:
    /// Rejected frame: previous breakdown with the held (then decaying) command.
    TorqueBreakdown fault_step(double timestamp) {
        const double t = std::isfinite(timestamp) ? timestamp : (last_timestamp_ ? *last_timestamp_ : 0.0);
        if (!fault_since_) fault_since_ = t;
        const double elapsed = t - *fault_since_;
        double scale = 1.0;
        if (elapsed > params_.fault_hold_s)
            scale = std::max(0.0, 1.0 - (elapsed - params_.fault_hold_s) / params_.fault_decay_s);

        TorqueBreakdown out = last_;
        out.timestamp = t;
        out.fault = true;
        for (std::size_t i = 0; i < 2; ++i) {
            out.side[i].hs = false;
            out.side[i].tau_cmd = held_cmd_[i] * scale;
        }
        return out;
    }

    ControllerParams params_;
    HsDetector detector_;
    std::array<LowpassFilter, 2> vel_filter_;
    std::array<LowpassFilter, 2> cmd_filter_;
    std::array<ModulationState, 2> modulation_;
    std::optional<double> alpha_override_;
    TorqueBreakdown last_;
    std::optional<double> last_timestamp_;
    std::optional<double> fault_since_;
    std::array<double, 2> held_cmd_{};
};

}  // namespace hipexo
