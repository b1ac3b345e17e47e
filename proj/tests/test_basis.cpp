#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "hipexo/basis.hpp"

using namespace hipexo;
using Catch::Matchers::WithinAbs;

namespace {

JointSample at_hip(double theta_ips, double vel = 0.0) { return {theta_ips, vel, 0.0, 0.0}; }

}  // namespace

TEST_CASE("gait spring torques") {
    GaitSpringParams p;
    p.k_ext = 50.0;
    p.theta_ext_eq = 0.1;
    CHECK(gait_spring_torques(at_hip(0.1), p).ext == 0.0);
    CHECK_THAT(gait_spring_torques(at_hip(-0.3), p).ext, WithinAbs(-20.0, 1e-12));
    CHECK(gait_spring_torques(at_hip(0.5), p).ext == 0.0);

    p.k_flex = 40.0;
    p.theta_flex_eq = 0.2;
    CHECK(gait_spring_torques(at_hip(0.5), p).flex == 0.0);
    CHECK_THAT(gait_spring_torques(at_hip(-0.05), p).flex, WithinAbs(10.0, 1e-12));
}

TEST_CASE("sts spring torque") {
    StsSpringParams p;
    p.k_sts = 20.0;
    CHECK(sts_spring_torque({0.0, 0.0, 0.0, 0.0}, p) == 0.0);
    CHECK_THAT(sts_spring_torque({0.0, 0.0, 0.8, 0.0}, p), WithinAbs(-16.0, 1e-12));
    CHECK(sts_spring_torque({0.0, 0.0, -0.2, 0.0}, p) == 0.0);
    p.k_sts = 75.0;
    CHECK(sts_spring_torque({0.0, 0.0, -0.2, 0.0}, p) == 0.0);
}

TEST_CASE("gait velocity factors") {
    GaitSpringParams p;
    p.vel_mod_ext = {-5.0, 0.0};
    p.vel_mod_flex = {5.0, 0.0};
    const auto f0 = gait_velocity_factors(at_hip(0.0, 0.0), p);
    CHECK(f0.ext == 0.5);
    CHECK(f0.flex == 0.5);
    CHECK_THAT(gait_velocity_factors(at_hip(0.0, -20.0), p).ext, WithinAbs(1.0, 1e-12));

    p.vel_mod_flex = {3.0, 1.0};
    CHECK_THAT(gait_velocity_factors(at_hip(0.0, 1.0), p).flex, WithinAbs(0.8807970779778823, 1e-15));
}

TEST_CASE("modulated gait torque composition") {
    CHECK(gait_torque(GaitSpringTorques{0.0, 0.0}, GaitVelocityFactors{0.3, 0.7}) == 0.0);
    CHECK(gait_torque(GaitSpringTorques{-20.0, 0.0}, GaitVelocityFactors{0.5, 0.9}) == -10.0);
    CHECK(gait_torque(GaitSpringTorques{-10.0, 4.0}, GaitVelocityFactors{1.0, 1.0}) == -6.0);

    GaitSpringParams p;
    const JointSample s{0.9, -1.2, 0.7, 0.2};
    CHECK(gait_torque(s, p) == gait_torque(gait_spring_torques(s, p), gait_velocity_factors(s, p)));
}

TEST_CASE("modulated sts torque") {
    StsSpringParams p;
    p.torso_mod = {25.0, 6.0};
    SECTION("torso factor floor for upright or backward lean") {
        for (double torso : {0.0, -0.1, -0.5}) {
            const auto f = sts_factors({0.0, 0.0, 0.8, torso}, p);
            CHECK_THAT(f.torso, WithinAbs(0.0024726231566347743, 1e-17));
        }
        const double basis = sts_spring_torque({0.0, 0.0, 0.8, -0.1}, p);
        CHECK(std::abs(sts_modulated_torque({0.0, 0.0, 0.8, -0.1}, p)) < 0.003 * std::abs(basis));
    }
    CHECK(sts_modulated_torque(0.0, StsFactors{0.9, 0.9}) == 0.0);
    CHECK(sts_modulated_torque(-16.0, StsFactors{0.5, 0.5}) == -4.0);
}

TEST_CASE("basis torques carry the right sign and never amplify") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> ang(-1.5, 2.5), vel(-24.0, 24.0), k(0.0, 200.0), eq(-1.0, 2.2),
        w(-50.0, 50.0), phi(-20.0, 20.0);
    for (int i = 0; i < 100000; ++i) {
        GaitSpringParams g{k(rng), k(rng), eq(rng), eq(rng), {w(rng), phi(rng)}, {w(rng), phi(rng)}};
        StsSpringParams s{k(rng), {w(rng), phi(rng)}, {w(rng), phi(rng)}};
        const JointSample js{ang(rng), vel(rng), ang(rng), ang(rng)};
        const auto t = gait_spring_torques(js, g);
        REQUIRE(t.ext <= 0.0);
        REQUIRE(t.flex >= 0.0);
        REQUIRE(std::abs(gait_torque(js, g)) <= std::abs(t.ext) + std::abs(t.flex));
        const double sts = sts_spring_torque(js, s);
        const double mod = sts_modulated_torque(js, s);
        REQUIRE(sts <= 0.0);
        REQUIRE(mod <= 0.0);
        REQUIRE(std::abs(mod) <= std::abs(sts));
    }
}

TEST_CASE("basis torques are continuous in the hip angle") {
    GaitSpringParams g;
    StsSpringParams s;
    const double step = 1e-4;
    const double kmax = std::max({g.k_ext, g.k_flex, s.k_sts});
    double prev_g = gait_torque({-1.0, 0.3, -1.0, 0.1}, g);
    double prev_s = sts_modulated_torque({-1.0, 0.3, -1.0, 0.1}, s);
    for (double th = -1.0 + step; th < 2.2; th += step) {
        const JointSample js{th, 0.3, th, 0.1};
        const double cur_g = gait_torque(js, g);
        const double cur_s = sts_modulated_torque(js, s);
        REQUIRE(std::abs(cur_g - prev_g) <= kmax * step * 1.0001);
        REQUIRE(std::abs(cur_s - prev_s) <= kmax * step * 1.0001);
        prev_g = cur_g;
        prev_s = cur_s;
    }
}

TEST_CASE("zero kinematics agree with scalar evaluation") {
    GaitSpringParams g;
    g.k_ext = 40.0;
    g.k_flex = 30.0;
    g.theta_ext_eq = 0.55;
    g.theta_flex_eq = 0.25;
    g.vel_mod_ext = {-5.0, 4.0};
    g.vel_mod_flex = {5.0, 4.0};
    const double eta = 1.0 / (1.0 + std::exp(4.0));
    const double expected = eta * (-40.0 * 0.55) + eta * (30.0 * 0.25);
    CHECK_THAT(gait_torque(JointSample{}, g), WithinAbs(expected, 1e-12));
    CHECK(sts_modulated_torque(JointSample{}, StsSpringParams{}) == 0.0);
}

TEST_CASE("parameter validation") {
    GaitSpringParams g;
    g.k_ext = -1.0;
    CHECK_THROWS_AS(g.validate(), ConfigError);
    g = {};
    g.theta_ext_eq = 2.5;
    CHECK_THROWS_AS(g.validate(), ConfigError);
    StsSpringParams s;
    s.k_sts = -0.1;
    CHECK_THROWS_AS(s.validate(), ConfigError);
    CHECK_FALSE(JointSample{0.0, 30.0, 0.0, 0.0}.valid());
    CHECK(JointSample{0.0, 24.0, 0.0, 0.0}.valid());
}
