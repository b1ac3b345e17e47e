#pragma once

// In-silico parameter design. The basis layer (springs + velocity modulation)
// is replayed open-loop over each task's kinematics and fit to a scaled
// biological hip moment with a bound-constrained Nelder-Mead search.
//
// objective = sum_a w_a * mean_strides MSE(tau_est, s * m * tau_bio)
//           + c_static * tau_est(zero kinematics)^2
//           + c_sign * sum_a mean(max(0, -tau_est * sign(tau_bio)) over |tau_bio| > deadband)

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "hipexo/basis.hpp"
#include "hipexo/controller.hpp"
#include "hipexo/error.hpp"
#include "hipexo/gait_data.hpp"
#include "hipexo/metrics.hpp"

namespace hipexo {

// ---------------------------------------------------------------------------
// Named access to the tunable scalars of ControllerParams.

struct ParamField {
    const char* name;
    double (*get)(const ControllerParams&);
    void (*set)(ControllerParams&, double);
};

#define HIPEXO_PARAM_FIELD(NAME, EXPR)                                        \
    ParamField {                                                              \
        NAME, [](const ControllerParams& p) { return p.EXPR; },              \
            [](ControllerParams& p, double v) { p.EXPR = v; }                \
    }

inline const std::array<ParamField, 13>& param_fields() {
    static const std::array<ParamField, 13> fields{
        HIPEXO_PARAM_FIELD("k_ext", gait.k_ext),
        HIPEXO_PARAM_FIELD("k_flex", gait.k_flex),
        HIPEXO_PARAM_FIELD("theta_ext_eq", gait.theta_ext_eq),
        HIPEXO_PARAM_FIELD("theta_flex_eq", gait.theta_flex_eq),
        HIPEXO_PARAM_FIELD("w_ext", gait.vel_mod_ext.w),
        HIPEXO_PARAM_FIELD("phi_ext", gait.vel_mod_ext.phi),
        HIPEXO_PARAM_FIELD("w_flex", gait.vel_mod_flex.w),
        HIPEXO_PARAM_FIELD("phi_flex", gait.vel_mod_flex.phi),
        HIPEXO_PARAM_FIELD("k_sts", sts.k_sts),
        HIPEXO_PARAM_FIELD("w_vel", sts.vel_mod.w),
        HIPEXO_PARAM_FIELD("phi_vel", sts.vel_mod.phi),
        HIPEXO_PARAM_FIELD("w_torso", sts.torso_mod.w),
        HIPEXO_PARAM_FIELD("phi_torso", sts.torso_mod.phi),
    };
    return fields;
}

#undef HIPEXO_PARAM_FIELD

inline const ParamField& param_field(const std::string& name) {
    for (const auto& f : param_fields())
        if (name == f.name) return f;
    throw ConfigError("unknown optimization parameter '" + name + "'");
}

struct Bounds {
    double lower = 0.0;
    double upper = 0.0;
};

inline std::map<std::string, Bounds> default_bounds() {
    return {{"k_ext", {0.0, 100.0}},      {"k_flex", {0.0, 100.0}},    {"theta_ext_eq", {-0.5, 1.2}},
            {"theta_flex_eq", {-0.8, 0.8}}, {"w_ext", {-15.0, 0.0}},    {"phi_ext", {-8.0, 8.0}},
            {"w_flex", {0.0, 15.0}},       {"phi_flex", {-8.0, 8.0}},   {"k_sts", {0.0, 60.0}},
            {"w_vel", {-15.0, 0.0}},       {"phi_vel", {-8.0, 8.0}},    {"w_torso", {0.0, 40.0}},
            {"phi_torso", {-2.0, 12.0}}};
}

/// Slopes, offsets and equilibrium angles of the two gait springs.
inline std::vector<std::string> default_free_parameters() {
    return {"theta_ext_eq", "theta_flex_eq", "w_ext", "phi_ext", "w_flex", "phi_flex"};
}

// ---------------------------------------------------------------------------

struct TaskSet {
    ActivityLabel label;
    std::vector<StrideSeries> strides;
    double weight = 1.0;
};

struct ObjectiveSpec {
    std::vector<TaskSet> tasks;
    double c_static = 10.0;
    double c_sign = 1.0;
    double target_scale = 0.2;    // fraction of the biological moment the exoskeleton should supply
    double sign_deadband = 0.02;  // Nm/kg; smaller biological moments carry no sign penalty
    std::vector<std::string> free = default_free_parameters();
    std::map<std::string, Bounds> bounds = default_bounds();

    void validate() const {
        if (tasks.empty()) throw ConfigError("objective: at least one task is required");
        for (const auto& t : tasks) {
            if (!std::isfinite(t.weight) || t.weight < 0.0)
                throw ConfigError("objective: task weight for " + to_string(t.label) + " must be finite and >= 0");
            if (t.strides.empty()) throw ConfigError("objective: task " + to_string(t.label) + " has no strides");
        }
        if (!(c_static >= 0.0) || !(c_sign >= 0.0) || !std::isfinite(c_static) || !std::isfinite(c_sign))
            throw ConfigError("objective: penalty weights must be finite and >= 0");
        if (!(target_scale > 0.0)) throw ConfigError("objective: target_scale must be positive");
        if (free.empty()) throw ConfigError("objective: no free parameters");
        for (const auto& name : free) {
            param_field(name);
            const auto it = bounds.find(name);
            if (it == bounds.end()) throw ConfigError("objective: no bounds for '" + name + "'");
            if (!(it->second.lower <= it->second.upper))
                throw ConfigError("objective: infeasible bounds for '" + name + "' (lower > upper)");
        }
    }
};

/// Open-loop basis torque (Nm) over a stride's kinematics: gait springs for
/// gait tasks, the modulated STS spring for sit-to-stand.
inline std::vector<double> estimate_torque(const ControllerParams& p, const StrideSeries& s) {
    const auto& hip = s.at(channel::hip_angle);
    const auto& vel = s.at(channel::hip_velocity);
    const auto& thigh = s.at(channel::thigh_angle);
    const auto& torso = s.at(channel::torso_angle);
    std::vector<double> out(hip.size());
    const bool sts = s.label.kind == ActivityKind::sit_to_stand;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const JointSample js{hip[i], vel[i], thigh[i], torso[i]};
        out[i] = sts ? sts_modulated_torque(js, p.sts) : gait_torque(js, p.gait);
    }
    return out;
}

inline double static_torque(const ControllerParams& p) { return gait_torque(JointSample{}, p.gait); }

struct ObjectiveTerms {
    double tracking = 0.0;
    double static_penalty = 0.0;
    double sign_penalty = 0.0;
    double total() const { return tracking + static_penalty + sign_penalty; }
};

inline void check_bounds(const ControllerParams& p, const ObjectiveSpec& spec) {
    for (const auto& name : spec.free) {
        const double v = param_field(name).get(p);
        const auto& b = spec.bounds.at(name);
        if (!(v >= b.lower && v <= b.upper))
            throw ContractError("objective: parameter '" + name + "' = " + csv::format_double(v) + " outside [" +
                                csv::format_double(b.lower) + ", " + csv::format_double(b.upper) + "]");
    }
}

inline ObjectiveTerms objective_terms(const ControllerParams& p, const ObjectiveSpec& spec) {
    check_bounds(p, spec);
    ObjectiveTerms t;
    for (const auto& task : spec.tasks) {
        double mse_sum = 0.0;
        double sign_sum = 0.0;
        std::size_t sign_n = 0;
        for (const auto& s : task.strides) {
            const auto est = estimate_torque(p, s);
            const auto& bio = s.at(channel::hip_moment);
            const double scale = s.body_mass * spec.target_scale;
            double se = 0.0;
            for (std::size_t i = 0; i < est.size(); ++i) {
                const double e = est[i] - scale * bio[i];
                se += e * e;
                if (std::abs(bio[i]) > spec.sign_deadband) {
                    sign_sum += std::max(0.0, -est[i] * (bio[i] > 0.0 ? 1.0 : -1.0));
                }
                ++sign_n;
            }
            mse_sum += se / static_cast<double>(est.size());
        }
        t.tracking += task.weight * mse_sum / static_cast<double>(task.strides.size());
        if (sign_n) t.sign_penalty += spec.c_sign * sign_sum / static_cast<double>(sign_n);
    }
    const double st = static_torque(p);
    t.static_penalty = spec.c_static * st * st;
    return t;
}

inline double objective(const ControllerParams& p, const ObjectiveSpec& spec) { return objective_terms(p, spec).total(); }

// ---------------------------------------------------------------------------
// Box-constrained Nelder-Mead on the unit hypercube.

struct NelderMeadOptions {
    std::size_t max_evaluations = 20000;
    double initial_step = 0.1;   // fraction of each box side
    double x_tolerance = 1e-10;  // simplex diameter, unit-cube coordinates
    double f_tolerance = 1e-14;  // relative spread of simplex values
    std::size_t max_restarts = 20;
    std::uint64_t seed = 1;
};

struct TraceRow {
    std::size_t iteration = 0;
    std::size_t evaluations = 0;
    double best = 0.0;
};

struct NelderMeadResult {
    std::vector<double> x;
    double f = 0.0;
    std::size_t evaluations = 0;
    std::vector<TraceRow> trace;
    std::string reason;
};

inline NelderMeadResult nelder_mead_box(const std::function<double(const std::vector<double>&)>& f,
                                        std::vector<double> x0, const std::vector<double>& lower,
                                        const std::vector<double>& upper, const NelderMeadOptions& opt) {
    const std::size_t d = x0.size();
    if (lower.size() != d || upper.size() != d) throw ContractError("nelder_mead_box: dimension mismatch");
    if (opt.max_evaluations < 1) throw ConfigError("optimizer: budget must be >= 1");

    std::vector<double> span(d);
    for (std::size_t i = 0; i < d; ++i) {
        if (!(lower[i] <= upper[i])) throw ConfigError("optimizer: infeasible bounds");
        span[i] = upper[i] - lower[i];
        x0[i] = std::clamp(x0[i], lower[i], upper[i]);
    }
    const auto to_x = [&](const std::vector<double>& u) {
        std::vector<double> x(d);
        for (std::size_t i = 0; i < d; ++i)
            x[i] = span[i] > 0.0 ? std::clamp(lower[i] + u[i] * span[i], lower[i], upper[i]) : lower[i];
        return x;
    };
    const auto project = [](std::vector<double>& u) {
        for (double& v : u) v = std::clamp(v, 0.0, 1.0);
    };

    NelderMeadResult res;
    std::vector<double> best_u(d);
    for (std::size_t i = 0; i < d; ++i) best_u[i] = span[i] > 0.0 ? (x0[i] - lower[i]) / span[i] : 0.0;
    // The warm start is returned verbatim if nothing beats it.
    res.x = x0;
    res.f = f(x0);
    res.evaluations = 1;
    std::size_t iteration = 0;
    res.trace.push_back({iteration, res.evaluations, res.f});

    std::mt19937_64 rng(opt.seed);
    const auto uniform = [&rng]() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };

    const auto eval = [&](std::vector<double>& u) -> double {
        project(u);
        const auto x = to_x(u);
        const double v = f(x);
        ++res.evaluations;
        if (v < res.f) {
            res.f = v;
            res.x = x;
            best_u = u;
        }
        return v;
    };
    const auto budget_left = [&]() { return res.evaluations < opt.max_evaluations; };

    std::size_t restarts = 0;
    std::size_t restarts_without_gain = 0;
    res.reason = "budget exhausted";
    while (budget_left()) {
        const double start_f = res.f;
        // Simplex around the incumbent. The first pass uses axis steps; restarts
        // use randomized step sizes and directions.
        std::vector<std::vector<double>> pts{best_u};
        std::vector<double> vals{res.f};
        const double step = restarts == 0 ? opt.initial_step : opt.initial_step * (0.2 + 0.8 * uniform());
        for (std::size_t i = 0; i < d && budget_left(); ++i) {
            auto u = best_u;
            double s = step;
            if (restarts > 0 && uniform() < 0.5) s = -s;
            if (u[i] + s > 1.0 || u[i] + s < 0.0) s = -s;
            u[i] += s;
            vals.push_back(eval(u));
            pts.push_back(u);
        }
        if (pts.size() < d + 1) break;

        std::size_t stagnant = 0;
        double last_best = *std::min_element(vals.begin(), vals.end());
        bool converged = false;
        while (budget_left()) {
            std::vector<std::size_t> order(d + 1);
            std::iota(order.begin(), order.end(), 0);
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
            {
                std::vector<std::vector<double>> p2;
                std::vector<double> v2;
                for (auto k : order) {
                    p2.push_back(pts[k]);
                    v2.push_back(vals[k]);
                }
                pts.swap(p2);
                vals.swap(v2);
            }
            ++iteration;
            res.trace.push_back({iteration, res.evaluations, res.f});

            double diameter = 0.0;
            for (std::size_t k = 1; k <= d; ++k)
                for (std::size_t i = 0; i < d; ++i) diameter = std::max(diameter, std::abs(pts[k][i] - pts[0][i]));
            const double spread = std::abs(vals[d] - vals[0]);
            if (diameter < opt.x_tolerance || spread <= opt.f_tolerance * (std::abs(vals[0]) + 1e-300)) {
                converged = true;
                break;
            }
            if (vals[0] < last_best * (1.0 - 1e-12) || vals[0] < last_best - 1e-300) {
                last_best = vals[0];
                stagnant = 0;
            } else if (++stagnant > 50 * d) {
                break;
            }

            std::vector<double> centroid(d, 0.0);
            for (std::size_t k = 0; k < d; ++k)
                for (std::size_t i = 0; i < d; ++i) centroid[i] += pts[k][i] / static_cast<double>(d);
            const auto along = [&](double t) {
                std::vector<double> u(d);
                for (std::size_t i = 0; i < d; ++i) u[i] = centroid[i] + t * (pts[d][i] - centroid[i]);
                return u;
            };

            auto xr = along(-1.0);
            const double fr = eval(xr);
            if (fr < vals[0]) {
                if (!budget_left()) {
                    pts[d] = xr;
                    vals[d] = fr;
                    break;
                }
                auto xe = along(-2.0);
                const double fe = eval(xe);
                if (fe < fr) {
                    pts[d] = xe;
                    vals[d] = fe;
                } else {
                    pts[d] = xr;
                    vals[d] = fr;
                }
            } else if (fr < vals[d - 1]) {
                pts[d] = xr;
                vals[d] = fr;
            } else {
                if (!budget_left()) break;
                const bool outside = fr < vals[d];
                auto xc = along(outside ? -0.5 : 0.5);
                const double fc = eval(xc);
                if (fc < (outside ? fr : vals[d])) {
                    pts[d] = xc;
                    vals[d] = fc;
                } else {
                    for (std::size_t k = 1; k <= d && budget_left(); ++k) {
                        for (std::size_t i = 0; i < d; ++i) pts[k][i] = pts[0][i] + 0.5 * (pts[k][i] - pts[0][i]);
                        vals[k] = eval(pts[k]);
                    }
                }
            }
        }

        const bool gained = res.f < start_f * (1.0 - 1e-9) || (start_f > 0.0 && res.f == 0.0);
        restarts_without_gain = gained ? 0 : restarts_without_gain + 1;
        if (res.f == 0.0) {
            res.reason = "objective reached zero";
            break;
        }
        if (converged && restarts_without_gain >= 2) {
            res.reason = "converged (restarts found no further improvement)";
            break;
        }
        if (++restarts > opt.max_restarts) {
            res.reason = "restart limit reached";
            break;
        }
    }
    if (res.trace.back().evaluations != res.evaluations || res.trace.back().best != res.f)
        res.trace.push_back({++iteration, res.evaluations, res.f});
    if (opt.max_evaluations == 1) res.reason = "budget exhausted";
    return res;
}

// ---------------------------------------------------------------------------

struct TaskSim {
    ActivityLabel label;
    double mean = 0.0;
    double sd = 0.0;
    std::size_t strides = 0;
};

/// Per-stride cosine similarity of the open-loop torque estimate and the
/// biological moment, averaged per task.
inline std::vector<TaskSim> report_similarity(const ControllerParams& p, const std::vector<TaskSet>& tasks) {
    if (tasks.empty()) throw ConfigError("report_similarity: no tasks");
    std::vector<TaskSim> out;
    for (const auto& t : tasks) {
        std::vector<double> sims;
        for (const auto& s : t.strides) sims.push_back(cosine_similarity(estimate_torque(p, s), s.at(channel::hip_moment)).value());
        TaskSim ts{t.label, 0.0, 0.0, sims.size()};
        ts.mean = std::accumulate(sims.begin(), sims.end(), 0.0) / static_cast<double>(sims.size());
        if (sims.size() > 1) {
            double ss = 0.0;
            for (double v : sims) ss += (v - ts.mean) * (v - ts.mean);
            ts.sd = std::sqrt(ss / static_cast<double>(sims.size() - 1));
        }
        out.push_back(ts);
    }
    return out;
}

/// Two tasks per row, grouped by activity kind.
inline std::string format_similarity_table(const std::vector<TaskSim>& sims) {
    std::vector<TaskSim> sorted = sims;
    std::stable_sort(sorted.begin(), sorted.end(), [](const TaskSim& a, const TaskSim& b) {
        const auto rank = [](ActivityKind k) {
            switch (k) {
                case ActivityKind::level_walk: return 0;
                case ActivityKind::ramp_ascent: return 1;
                case ActivityKind::stair_ascent: return 2;
                case ActivityKind::ramp_descent: return 3;
                case ActivityKind::stair_descent: return 4;
                case ActivityKind::sit_to_stand: return 5;
            }
            return 6;
        };
        if (rank(a.label.kind) != rank(b.label.kind)) return rank(a.label.kind) < rank(b.label.kind);
        return a.label.parameter < b.label.parameter;
    });
    std::ostringstream os;
    os << std::left << std::setw(10) << "Activity" << std::setw(9) << "SIM" << "| " << std::setw(10) << "Activity"
       << "SIM\n";
    os << std::string(40, '-') << '\n';
    os << std::fixed << std::setprecision(4);
    for (std::size_t i = 0; i < sorted.size(); i += 2) {
        os << std::setw(10) << to_string(sorted[i].label) << std::setw(9) << sorted[i].mean;
        if (i + 1 < sorted.size()) os << "| " << std::setw(10) << to_string(sorted[i + 1].label) << sorted[i + 1].mean;
        os << '\n';
    }
    return os.str();
}

struct OptResult {
    ControllerParams best;
    double initial_objective = 0.0;
    double best_objective = 0.0;
    std::vector<TraceRow> trace;
    std::vector<TaskSim> sims;
    std::string reason;
    std::size_t evaluations = 0;
};

/// Bound-constrained search over the free parameters, starting at `warm_start`.
/// Frozen parameters keep their warm-start values bit-exactly.
inline OptResult optimize(const ObjectiveSpec& spec, const ControllerParams& warm_start, std::size_t budget,
                          std::uint64_t seed = 1) {
    spec.validate();
    if (budget < 1) throw ConfigError("optimize: budget must be >= 1");
    check_bounds(warm_start, spec);

    std::vector<double> x0, lo, hi;
    for (const auto& name : spec.free) {
        x0.push_back(param_field(name).get(warm_start));
        lo.push_back(spec.bounds.at(name).lower);
        hi.push_back(spec.bounds.at(name).upper);
    }
    const auto assemble = [&](const std::vector<double>& x) {
        ControllerParams p = warm_start;
        for (std::size_t i = 0; i < x.size(); ++i) param_field(spec.free[i]).set(p, x[i]);
        return p;
    };
    NelderMeadOptions opt;
    opt.max_evaluations = budget;
    opt.seed = seed;
    const auto nm = nelder_mead_box([&](const std::vector<double>& x) { return objective(assemble(x), spec); }, x0,
                                    lo, hi, opt);

    OptResult r;
    r.best = nm.evaluations > 1 && nm.x != x0 ? assemble(nm.x) : warm_start;
    r.initial_objective = nm.trace.front().best;
    r.best_objective = nm.f;
    r.trace = nm.trace;
    r.reason = nm.reason;
    r.evaluations = nm.evaluations;
    r.sims = report_similarity(r.best, spec.tasks);
    return r;
}

/// Replaces each stride's hip moment with the torque `p` produces divided by
/// (mass * target_scale). Used to build self-consistency fixtures.
inline std::vector<TaskSet> with_reference_moment(std::vector<TaskSet> tasks, const ControllerParams& p,
                                                  double target_scale) {
    for (auto& t : tasks)
        for (auto& s : t.strides) {
            auto est = estimate_torque(p, s);
            for (double& v : est) v /= s.body_mass * target_scale;
            s.channels[channel::hip_moment] = std::move(est);
        }
    return tasks;
}

}  // namespace hipexo
