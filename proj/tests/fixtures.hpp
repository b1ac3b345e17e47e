#pragma once

// Shared fixtures for unit and acceptance tests.

#include <cmath>
#include <vector>

#include "hipexo/optimizer.hpp"
#include "hipexo/synth.hpp"

namespace hipexo::fixtures {

inline std::vector<TaskSet> battery(std::uint64_t seed, std::size_t strides) {
    std::vector<TaskSet> tasks;
    for (const auto& l : standard_battery_labels())
        tasks.push_back({l, synth_strides(l, seed, strides), default_task_weight(l)});
    return tasks;
}

/// Reference gait parameters with phi_flex chosen so the static torque is zero.
inline ControllerParams zero_static_reference() {
    ControllerParams p;
    p.gait = synthetic_reference_gait();
    p.sts = synthetic_reference_sts();
    const double eta_e = sigmoid(0.0, p.gait.vel_mod_ext);
    p.gait.vel_mod_flex.phi =
        std::log(p.gait.k_flex * p.gait.theta_flex_eq / (p.gait.k_ext * p.gait.theta_ext_eq * eta_e) - 1.0);
    return p;
}

/// Alternating +/- `fraction` relative perturbation of the free parameters.
inline ControllerParams perturbed(const ControllerParams& p, const std::vector<std::string>& free, double fraction) {
    ControllerParams out = p;
    double sign = 1.0;
    for (const auto& name : free) {
        const auto& f = param_field(name);
        f.set(out, f.get(p) * (1.0 + sign * fraction));
        sign = -sign;
    }
    return out;
}

/// Battery whose biological moment is exactly what `reference` produces.
inline ObjectiveSpec self_consistent_spec(const ControllerParams& reference, std::uint64_t seed, std::size_t strides) {
    ObjectiveSpec spec;
    spec.tasks = with_reference_moment(battery(seed, strides), reference, spec.target_scale);
    return spec;
}

}  // namespace hipexo::fixtures
