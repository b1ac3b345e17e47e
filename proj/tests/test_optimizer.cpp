#include <catch_amalgamated.hpp>

#include <cmath>

#include "fixtures.hpp"
#include "hipexo/optimizer.hpp"
#include "hipexo/params_io.hpp"

using namespace hipexo;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

ObjectiveSpec small_spec(std::size_t strides = 3) {
    ObjectiveSpec spec;
    spec.tasks = fixtures::battery(3, strides);
    return spec;
}

ControllerParams warm_start() {
    ControllerParams p;
    p.gait = synthetic_reference_gait();
    return p;
}

}  // namespace

TEST_CASE("parameter fields") {
    ControllerParams p;
    for (const auto& f : param_fields()) {
        f.set(p, 0.125);
        REQUIRE(f.get(p) == 0.125);
    }
    CHECK_THROWS_AS(param_field("nope"), ConfigError);
    CHECK(default_free_parameters().size() == 6);
    for (const auto& name : default_free_parameters()) CHECK(default_bounds().count(name) == 1);
}

TEST_CASE("objective spec validation") {
    auto spec = small_spec(2);
    spec.bounds["w_ext"] = {1.0, -1.0};
    CHECK_THROWS_WITH(spec.validate(), Catch::Matchers::ContainsSubstring("infeasible bounds for 'w_ext'"));
    spec = small_spec(2);
    spec.free = {"bogus"};
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    spec = small_spec(2);
    spec.tasks.front().weight = -1.0;
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    spec = small_spec(2);
    spec.tasks.clear();
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    CHECK_THROWS_AS(optimize(small_spec(2), warm_start(), 0), ConfigError);
}

TEST_CASE("out-of-bounds evaluation is a contract error") {
    auto p = warm_start();
    p.gait.vel_mod_ext.w = 3.0;
    CHECK_THROWS_AS(objective(p, small_spec(2)), ContractError);
}

TEST_CASE("budget of one evaluates the warm start only") {
    const auto spec = small_spec(2);
    const auto w = warm_start();
    const auto r = optimize(spec, w, 1);
    REQUIRE(r.trace.size() == 1);
    CHECK(r.evaluations == 1);
    CHECK(r.trace.front().evaluations == 1);
    CHECK(r.best_objective == objective(w, spec));
    CHECK(params_to_json(r.best) == params_to_json(w));
}

TEST_CASE("search is deterministic, bounded and monotone") {
    const auto spec = small_spec();
    const auto w = warm_start();
    const auto a = optimize(spec, w, 1500, 5);
    const auto b = optimize(spec, w, 1500, 5);
    CHECK(params_to_json(a.best) == params_to_json(b.best));
    CHECK(a.best_objective == b.best_objective);
    REQUIRE(a.trace.size() == b.trace.size());

    CHECK(a.evaluations <= 1500);
    CHECK(a.best_objective <= a.initial_objective);
    CHECK_THAT(a.best_objective, WithinRel(objective(a.best, spec), 1e-12));
    for (std::size_t i = 1; i < a.trace.size(); ++i) {
        REQUIRE(a.trace[i].best <= a.trace[i - 1].best);
        REQUIRE(a.trace[i].evaluations >= a.trace[i - 1].evaluations);
    }
    for (const auto& name : spec.free) {
        const double v = param_field(name).get(a.best);
        REQUIRE(v >= spec.bounds.at(name).lower);
        REQUIRE(v <= spec.bounds.at(name).upper);
    }

    const auto json_a = params_to_json(a.best), json_w = params_to_json(w);
    CHECK(json_a["sts"] == json_w["sts"]);
    CHECK(json_a["descent"] == json_w["descent"]);
    CHECK(a.best.gait.k_ext == w.gait.k_ext);
    CHECK(a.best.gait.k_flex == w.gait.k_flex);
}

TEST_CASE("narrow bounds are honoured") {
    auto spec = small_spec(2);
    spec.bounds["theta_ext_eq"] = {0.5, 0.52};
    spec.bounds["phi_flex"] = {1.0, 1.0};
    auto w = warm_start();
    w.gait.theta_ext_eq = 0.51;
    w.gait.vel_mod_flex.phi = 1.0;
    const auto r = optimize(spec, w, 800);
    CHECK(r.best.gait.theta_ext_eq >= 0.5);
    CHECK(r.best.gait.theta_ext_eq <= 0.52);
    CHECK(r.best.gait.vel_mod_flex.phi == 1.0);
}

TEST_CASE("static penalty weight trades off zero-kinematics torque") {
    double prev = INFINITY;
    for (double c : {1.0, 10.0, 100.0}) {
        auto spec = small_spec(2);
        spec.c_static = c;
        const auto r = optimize(spec, warm_start(), 4000);
        const double st = std::abs(static_torque(r.best));
        CHECK(st <= prev + 1e-9);
        prev = st;
    }
}

TEST_CASE("tracking term scales with task weights") {
    auto spec = small_spec(2);
    spec.c_static = 0.0;
    spec.c_sign = 0.0;
    const auto p = warm_start();
    const double base = objective_terms(p, spec).tracking;
    for (auto& t : spec.tasks) t.weight *= 2.0;
    CHECK_THAT(objective_terms(p, spec).tracking, WithinRel(2.0 * base, 1e-14));
}

TEST_CASE("sign penalty fires only for opposing torque") {
    ObjectiveSpec spec = fixtures::self_consistent_spec(fixtures::zero_static_reference(), 2, 2);
    const auto ref = fixtures::zero_static_reference();
    CHECK(objective_terms(ref, spec).sign_penalty == 0.0);
    for (auto& t : spec.tasks)
        for (auto& s : t.strides)
            for (double& m : s.channels[channel::hip_moment]) m = -m;
    CHECK(objective_terms(ref, spec).sign_penalty > 0.0);
}

TEST_CASE("self-consistent fixture is recovered") {
    const auto ref = fixtures::zero_static_reference();
    CHECK(std::abs(static_torque(ref)) < 1e-12);
    const auto spec = fixtures::self_consistent_spec(ref, 7, 3);
    CHECK(objective(ref, spec) < 1e-20);
    const auto warm = fixtures::perturbed(ref, spec.free, 0.2);
    const auto r = optimize(spec, warm, 20000);
    CHECK(r.best_objective <= 1e-3 * r.initial_objective);
    for (const auto& s : r.sims) CHECK(s.mean >= 0.99);
}

TEST_CASE("shipped parameters reproduce their similarity table") {
    const auto p = load_params(HIPEXO_CONFIG_DIR "/example_params.json");
    const auto tasks = fixtures::battery(1, 10);
    const auto sims = report_similarity(p, tasks);
    const double expected[] = {0.98912337751458923, 0.9864937606816,     0.98309687130612089, 0.98274356276779251,
                               0.97274627355117327, 0.96397437087172499, 0.83422574509588154, 0.83856150494840409,
                               0.74861031182945736, 0.70654089104792617, 0.99832958947698935};
    REQUIRE(sims.size() == 11);
    for (std::size_t i = 0; i < sims.size(); ++i) CHECK_THAT(sims[i].mean, WithinAbs(expected[i], 1e-9));
    ObjectiveSpec spec;
    spec.tasks = tasks;
    CHECK_THAT(objective(p, spec), WithinRel(115.16485983986433, 1e-9));

    const auto table = format_similarity_table(sims);
    CHECK(table.find("LG 0.85") < table.find("RA 5.2"));
    CHECK(table.find("SA 7") < table.find("RD 5.2"));
    CHECK(table.find("SD 7") < table.find("STS"));
}

TEST_CASE("nelder-mead on a quadratic bowl") {
    const auto f = [](const std::vector<double>& x) { return (x[0] - 0.3) * (x[0] - 0.3) + 4.0 * (x[1] + 0.7) * (x[1] + 0.7); };
    NelderMeadOptions opt;
    opt.max_evaluations = 5000;
    const auto r = nelder_mead_box(f, {0.0, 0.0}, {-1.0, -1.0}, {1.0, 1.0}, opt);
    CHECK_THAT(r.x[0], WithinAbs(0.3, 1e-5));
    CHECK_THAT(r.x[1], WithinAbs(-0.7, 1e-5));

    const auto edge = nelder_mead_box(f, {0.0, 0.0}, {-1.0, -0.5}, {1.0, 1.0}, opt);
    CHECK_THAT(edge.x[1], WithinAbs(-0.5, 1e-6));
}
