#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <vector>

#include "hipexo/controller.hpp"
#include "hipexo/controller_log.hpp"
#include "hipexo/params_io.hpp"

using namespace hipexo;
using Catch::Matchers::WithinAbs;

namespace {

std::vector<SensorFrame> walking_frames(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-0.02, 0.02);
    std::vector<SensorFrame> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / 250.0;
        const double ph = 2.0 * std::numbers::pi * t;
        auto& f = out[i];
        f.timestamp = t;
        f.side[0] = {0.35 * std::sin(ph) + 0.1, 0.35 * std::sin(ph) + 0.2, 0.35 * 2 * std::numbers::pi * std::cos(ph)};
        f.side[1] = {-0.35 * std::sin(ph) + 0.1, -0.35 * std::sin(ph) + 0.2,
                     -0.35 * 2 * std::numbers::pi * std::cos(ph)};
        f.theta_torso = 0.1;
        f.imu = {u(rng), u(rng), u(rng), t};
    }
    return out;
}

ControllerParams example_params() { return load_params(HIPEXO_CONFIG_DIR "/example_params.json"); }

}  // namespace

TEST_CASE("zero kinematics give a near-zero command") {
    Controller c(example_params());
    TorqueBreakdown b;
    for (int i = 0; i < 1000; ++i) {
        SensorFrame f;
        f.timestamp = i / 250.0;
        f.imu.timestamp = f.timestamp;
        b = c.step(f);
    }
    for (const auto& s : b.side) {
        CHECK(std::abs(s.tau_cmd) < 0.5);
        CHECK(s.tau_sts_mod == 0.0);
    }
}

TEST_CASE("breakdown fields compose") {
    Controller c(example_params());
    const auto& p = c.params();
    for (const auto& f : walking_frames(2000, 1)) {
        const auto b = c.step(f);
        for (const auto& s : b.side) {
            REQUIRE(s.tau_gait == gait_torque(GaitSpringTorques{s.tau_ext, s.tau_flex}, GaitVelocityFactors{s.eta_ext, s.eta_flex}));
            REQUIRE(s.tau_gait_mod == attenuate_extension(s.tau_gait, s.alpha, p.descent));
            REQUIRE(s.tau_sts_mod == sts_modulated_torque(s.tau_sts, StsFactors{s.eta_sts_vel, s.eta_sts_torso}));
            REQUIRE(s.tau_act_raw == blend(s.tau_sts_mod, s.tau_gait_mod, s.beta));
            REQUIRE(std::abs(s.tau_cmd) <= p.torque_limit);
            REQUIRE(s.alpha >= 0.0);
            REQUIRE(s.alpha <= 1.0);
            REQUIRE(s.beta >= 0.0);
            REQUIRE(s.beta <= 1.0);
        }
    }
}

TEST_CASE("command is clamped at the torque limit") {
    ControllerParams p;
    p.gait.k_ext = 200.0;
    p.gait.vel_mod_ext = {-1.0, -10.0};
    Controller c(p);
    TorqueBreakdown b;
    for (int i = 0; i < 500; ++i) {
        SensorFrame f;
        f.timestamp = i / 250.0;
        f.imu.timestamp = f.timestamp;
        f.side[0] = {-1.0, -1.0, 0.0};
        f.side[1] = {0.5, 0.5, 0.0};
        b = c.step(f);
    }
    CHECK(b.side[0].tau_act_raw < -22.0);
    CHECK(b.side[0].tau_cmd == -22.0);
}

TEST_CASE("reset reproduces the same sequence") {
    const auto frames = walking_frames(1500, 2);
    Controller c(example_params());
    std::vector<TorqueBreakdown> first;
    for (const auto& f : frames) first.push_back(c.step(f));
    c.reset();
    for (std::size_t i = 0; i < frames.size(); ++i) REQUIRE(c.step(frames[i]) == first[i]);
}

TEST_CASE("reset then a zero frame gives zero torque") {
    auto p = example_params();
    p.gait.theta_ext_eq = 0.0;
    p.gait.theta_flex_eq = 0.0;
    Controller c(p);
    for (const auto& f : walking_frames(500, 3)) c.step(f);
    c.reset();
    const auto b = c.step(SensorFrame{});
    CHECK_FALSE(b.fault);
    for (const auto& s : b.side) {
        CHECK(s.tau_ext == 0.0);
        CHECK(s.tau_flex == 0.0);
        CHECK(s.tau_gait == 0.0);
        CHECK(s.tau_gait_mod == 0.0);
        CHECK(s.tau_sts == 0.0);
        CHECK(s.tau_sts_mod == 0.0);
        CHECK(s.tau_act_raw == 0.0);
        CHECK(s.tau_cmd == 0.0);
        CHECK(s.alpha == 0.0);
        CHECK_FALSE(s.hs);
    }
}

TEST_CASE("reset clears modulation state") {
    Controller c(example_params());
    c.set_alpha_override(0.6);
    for (const auto& f : walking_frames(300, 7)) c.step(f);
    REQUIRE(c.modulation(Side::left).alpha == 0.6);
    c.set_alpha_override(std::nullopt);
    c.reset();
    CHECK(c.modulation(Side::left).alpha == 0.0);
    CHECK(c.modulation(Side::right).alpha == 0.0);
}

TEST_CASE("timestamp regression is a stream error") {
    Controller c(example_params());
    SensorFrame f;
    f.timestamp = 1.0;
    c.step(f);
    CHECK_THROWS_AS(c.step(f), StreamError);
    f.timestamp = 0.5;
    CHECK_THROWS_AS(c.step(f), StreamError);
}

TEST_CASE("bad frames hold then decay the command") {
    Controller c(example_params());
    const auto frames = walking_frames(600, 4);
    TorqueBreakdown last;
    for (const auto& f : frames) last = c.step(f);
    const double held = last.side[0].tau_cmd;
    REQUIRE(std::abs(held) > 0.1);

    const double t0 = frames.back().timestamp + 0.004;
    for (int k = 0; k < 100; ++k) {
        SensorFrame bad;
        bad.timestamp = t0 + 0.004 * k;
        bad.imu.timestamp = bad.timestamp;
        bad.side[0].theta_ips = std::numeric_limits<double>::quiet_NaN();
        const auto b = c.step(bad);
        REQUIRE(b.fault);
        const double elapsed = 0.004 * k;
        double expected = held;
        if (elapsed > 0.1) expected = held * std::max(0.0, 1.0 - (elapsed - 0.1) / 0.2);
        REQUIRE_THAT(b.side[0].tau_cmd, WithinAbs(expected, 1e-12));
        REQUIRE(std::abs(b.side[0].tau_cmd) <= std::abs(held));
    }
    SensorFrame nan_time;
    nan_time.timestamp = std::numeric_limits<double>::quiet_NaN();
    CHECK(c.step(nan_time).fault);
}

TEST_CASE("alpha override pins both sides") {
    Controller c(example_params());
    c.set_alpha_override(0.0);
    for (const auto& f : walking_frames(800, 5)) {
        const auto b = c.step(f);
        REQUIRE(b.side[0].alpha == 0.0);
        REQUIRE(b.side[1].tau_gait_mod == b.side[1].tau_gait);
    }
}

TEST_CASE("breakdown and frame logs round-trip bit-exactly") {
    Controller c(example_params());
    const auto frames = walking_frames(700, 6);
    std::vector<TorqueBreakdown> log;
    for (const auto& f : frames) log.push_back(c.step(f));

    std::stringstream ss;
    write_breakdown_log(ss, log, {"tool test"});
    const auto table = csv::parse(ss);
    CHECK(table.comments.front() == "tool test");
    const auto back = read_breakdown_log(table);
    REQUIRE(back.size() == log.size());
    for (std::size_t i = 0; i < log.size(); ++i) REQUIRE(back[i] == log[i]);

    std::stringstream fs;
    write_frame_log(fs, frames);
    const auto fback = read_frame_log(csv::parse(fs));
    REQUIRE(fback.size() == frames.size());
    Controller c2(example_params());
    for (std::size_t i = 0; i < fback.size(); ++i) REQUIRE(c2.step(fback[i]) == log[i]);
}

TEST_CASE("params json round-trip") {
    const auto p = example_params();
    const auto q = params_from_json(params_to_json(p));
    CHECK(params_to_json(q) == params_to_json(p));
    CHECK(p.gait.k_ext == 40.0);

    nlohmann::json bad = params_to_json(p);
    bad["runtime"]["torque_limit"] = -1.0;
    CHECK_THROWS_AS(params_from_json(bad), ConfigError);
    bad = params_to_json(p);
    bad["gait"]["k_ext"] = "x";
    CHECK_THROWS_AS(params_from_json(bad), ConfigError);
}
