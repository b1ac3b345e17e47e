#pragma once

// Task-context layer: descent attenuation latched at heel strike, the
// standing reset ramp, the bilateral-symmetry blend factor and the convex
// gait/STS blend.

#include <algorithm>
#include <cmath>
#include <optional>

#include "hipexo/error.hpp"
#include "hipexo/signal.hpp"

namespace hipexo {

struct BilateralSample {
    double theta_thigh_l = 0.0;
    double theta_thigh_r = 0.0;
    double theta_diff = 0.0;      // theta_thigh_l - theta_thigh_r
    double theta_diff_dot = 0.0;  // rad/s
    double timestamp = 0.0;

    static BilateralSample from_thighs(double left, double right, double diff_dot, double t) {
        return {left, right, left - right, diff_dot, t};
    }
};

struct DescentModParams {
    SigmoidParams step_mod{-25.0, -11.0};
    double lambda = 1.0;
    double thigh_min = -0.35;
    double thigh_max = 0.9;
    double t_wait = 2.0;
    double t_decay = 1.0;

    void validate() const {
        if (!(step_mod.w < 0.0)) throw ConfigError("descent: w_step must be negative");
        if (!std::isfinite(step_mod.phi)) throw ConfigError("descent: phi_step must be finite");
        if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("descent: lambda must lie in [0, 1]");
        if (!(thigh_min < thigh_max)) throw ConfigError("descent: thigh_min must be below thigh_max");
        if (!(t_wait > 0.0) || !(t_decay > 0.0)) throw ConfigError("descent: t_wait and t_decay must be positive");
    }
};

struct SymmetryParams {
    SigmoidParams sym_mod{-10.0, -4.0};
    double vel_threshold = 0.5;  // rad/s
    double seated_ext_threshold = 1.0;
    double ema_smoothing = 0.1;
    double standing_beta = 0.9;  // smoothed beta above this counts as standing

    void validate() const {
        if (!(sym_mod.w < 0.0) || !(sym_mod.phi < 0.0))
            throw ConfigError("symmetry: w_sc and phi_sc must both be negative");
        if (!(vel_threshold > 0.0)) throw ConfigError("symmetry: velocity threshold must be positive");
        if (!(ema_smoothing > 0.0 && ema_smoothing <= 1.0))
            throw ConfigError("symmetry: EMA smoothing must lie in (0, 1]");
        if (!(standing_beta > 0.0 && standing_beta < 1.0))
            throw ConfigError("symmetry: standing beta threshold must lie in (0, 1)");
        if (!std::isfinite(seated_ext_threshold)) throw ConfigError("symmetry: seated threshold must be finite");
    }
};

struct ModulationState {
    double alpha = 0.0;
    double beta_filtered = 0.0;
    std::optional<double> standing_since;
    std::optional<double> ramp_initial_alpha;  // set while the reset ramp runs
};

/// Descent factor from the heel-strike snapshot. Zero when either thigh lies
/// outside the plausible range.
inline double alpha_at_heelstrike(const BilateralSample& hs, const DescentModParams& p) {
    const auto in_range = [&](double th) { return th >= p.thigh_min && th <= p.thigh_max; };
    if (!in_range(hs.theta_thigh_l) || !in_range(hs.theta_thigh_r)) return 0.0;
    return sigmoid(std::abs(hs.theta_diff), p.step_mod);
}

/// Latches a new heel-strike alpha; cancels any standing timer or ramp.
inline void latch_alpha(ModulationState& state, double alpha) {
    state.alpha = std::clamp(alpha, 0.0, 1.0);
    state.standing_since.reset();
    state.ramp_initial_alpha.reset();
}

inline double extension_scale(double alpha, const DescentModParams& p) { return 1.0 - p.lambda * alpha; }

inline double attenuate_extension(double tau_gait, double alpha, const DescentModParams& p) {
    return extension_scale(alpha, p) * std::min(0.0, tau_gait) + std::max(0.0, tau_gait);
}

inline double attenuate_extension(double tau_gait, const ModulationState& state, const DescentModParams& p) {
    return attenuate_extension(tau_gait, state.alpha, p);
}

/// Once standing has lasted t_wait, alpha falls linearly to zero over t_decay,
/// measured from standing onset + t_wait. Leaving the standing posture freezes
/// alpha at its current value.
inline void reset_tick(ModulationState& state, bool standing, double now, const DescentModParams& p) {
    if (!standing) {
        state.standing_since.reset();
        state.ramp_initial_alpha.reset();
        return;
    }
    if (!state.standing_since) state.standing_since = now;
    const double ramp_origin = *state.standing_since + p.t_wait;
    if (now < ramp_origin) return;
    if (!state.ramp_initial_alpha) state.ramp_initial_alpha = state.alpha;
    const double remaining = std::max(0.0, 1.0 - (now - ramp_origin) / p.t_decay);
    state.alpha = *state.ramp_initial_alpha * remaining;
}

/// Symmetry factor gated by the inter-thigh velocity difference (gate open iff
/// |diff_dot| < threshold); forced to 1 when both thighs are flexed past the
/// seated threshold.
inline double beta_raw(const BilateralSample& s, const SymmetryParams& p) {
    if (s.theta_thigh_l > p.seated_ext_threshold && s.theta_thigh_r > p.seated_ext_threshold) return 1.0;
    if (!(std::abs(s.theta_diff_dot) < p.vel_threshold)) return 0.0;
    return sigmoid(std::abs(s.theta_diff), p.sym_mod);
}

inline double beta_smoothed(ModulationState& state, double beta, double smoothing) {
    EmaState ema{smoothing, state.beta_filtered};
    state.beta_filtered = std::clamp(ema_step(ema, beta), 0.0, 1.0);
    return state.beta_filtered;
}

inline bool is_standing(const ModulationState& state, const SymmetryParams& p) {
    return state.beta_filtered > p.standing_beta;
}

inline double blend(double tau_sts_mod, double tau_gait_mod, double beta) {
    if (!(beta >= 0.0 && beta <= 1.0)) throw ContractError("blend: beta must lie in [0, 1]");
    return beta * tau_sts_mod + (1.0 - beta) * tau_gait_mod;
}

}  // namespace hipexo
