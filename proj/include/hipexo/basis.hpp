#pragma once

// Velocity-modulated virtual torsion springs. Angles in radians, flexion
// positive; torques in Nm, extension negative.

#include <algorithm>
#include <cmath>

#include "hipexo/error.hpp"
#include "hipexo/signal.hpp"

namespace hipexo {

inline constexpr double kJointAngleMin = -1.0;
inline constexpr double kJointAngleMax = 2.2;
inline constexpr double kMaxHipVelocity = 25.0;

struct GaitSpringParams {
    double k_ext = 40.0;   // Nm/rad
    double k_flex = 30.0;  // Nm/rad
    double theta_ext_eq = 0.55;
    double theta_flex_eq = 0.25;
    SigmoidParams vel_mod_ext{-5.0, 4.0};
    SigmoidParams vel_mod_flex{5.0, 4.0};

    void validate() const {
        if (!(k_ext >= 0.0) || !(k_flex >= 0.0)) throw ConfigError("gait springs: stiffness must be >= 0");
        for (double eq : {theta_ext_eq, theta_flex_eq})
            if (!(eq >= kJointAngleMin && eq <= kJointAngleMax))
                throw ConfigError("gait springs: equilibrium angle outside [-1.0, 2.2] rad");
        for (double v : {vel_mod_ext.w, vel_mod_ext.phi, vel_mod_flex.w, vel_mod_flex.phi})
            if (!std::isfinite(v)) throw ConfigError("gait springs: sigmoid parameters must be finite");
    }
};

struct StsSpringParams {
    double k_sts = 20.0;
    SigmoidParams vel_mod{-6.0, 2.0};
    SigmoidParams torso_mod{25.0, 6.0};

    void validate() const {
        if (!(k_sts >= 0.0)) throw ConfigError("sts spring: stiffness must be >= 0");
        for (double v : {vel_mod.w, vel_mod.phi, torso_mod.w, torso_mod.phi})
            if (!std::isfinite(v)) throw ConfigError("sts spring: sigmoid parameters must be finite");
    }
};

struct JointSample {
    double theta_ips = 0.0;      // hip angle
    double theta_ips_dot = 0.0;  // hip angular velocity, rad/s
    double theta_thigh = 0.0;
    double theta_torso = 0.0;  // forward lean positive

    bool valid() const {
        return std::isfinite(theta_ips) && std::isfinite(theta_ips_dot) && std::isfinite(theta_thigh) &&
               std::isfinite(theta_torso) && std::abs(theta_ips_dot) < kMaxHipVelocity;
    }
};

struct GaitSpringTorques {
    double ext = 0.0;   // <= 0
    double flex = 0.0;  // >= 0
};

struct GaitVelocityFactors {
    double ext = 0.0;
    double flex = 0.0;
};

inline GaitSpringTorques gait_spring_torques(const JointSample& s, const GaitSpringParams& p) {
    return {std::min(0.0, p.k_ext * (s.theta_ips - p.theta_ext_eq)),
            std::max(0.0, p.k_flex * (p.theta_flex_eq - s.theta_ips))};
}

/// Unidirectional spring with its equilibrium at zero thigh angle.
inline double sts_spring_torque(const JointSample& s, const StsSpringParams& p) {
    return std::min(0.0, -p.k_sts * s.theta_thigh);
}

inline GaitVelocityFactors gait_velocity_factors(const JointSample& s, const GaitSpringParams& p) {
    return {sigmoid(s.theta_ips_dot, p.vel_mod_ext), sigmoid(s.theta_ips_dot, p.vel_mod_flex)};
}

inline double gait_torque(const GaitSpringTorques& t, const GaitVelocityFactors& eta) {
    return eta.ext * t.ext + eta.flex * t.flex;
}

inline double gait_torque(const JointSample& s, const GaitSpringParams& p) {
    return gait_torque(gait_spring_torques(s, p), gait_velocity_factors(s, p));
}

struct StsFactors {
    double velocity = 0.0;
    double torso = 0.0;
};

/// Torso factor only sees forward lean; upright or backward lean sits at the sigmoid floor.
inline StsFactors sts_factors(const JointSample& s, const StsSpringParams& p) {
    return {sigmoid(s.theta_ips_dot, p.vel_mod), sigmoid(std::max(0.0, s.theta_torso), p.torso_mod)};
}

inline double sts_modulated_torque(double tau_sts, const StsFactors& f) { return tau_sts * f.velocity * f.torso; }

inline double sts_modulated_torque(const JointSample& s, const StsSpringParams& p) {
    return sts_modulated_torque(sts_spring_torque(s, p), sts_factors(s, p));
}

}  // namespace hipexo
