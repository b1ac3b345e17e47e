#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "hipexo/hs_detect.hpp"

using namespace hipexo;

namespace {

struct Stream {
    std::vector<ImuFrame> imu;
    std::vector<BilateralSample> bilateral;
};

// Quiet noise plus a thigh spike on the left every `period` seconds.
Stream left_spikes(double duration, double period, double first, double amplitude, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-0.01, 0.01);
    Stream s;
    const double fs = 250.0;
    const auto n = static_cast<std::size_t>(duration * fs);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / fs;
        const double phase = std::fmod(t - first + 10.0 * period, period);
        const double d = std::min(phase, period - phase);
        const double spike = amplitude * std::exp(-(d / 0.008) * (d / 0.008));
        s.imu.push_back({u(rng) + spike, u(rng), u(rng), t});
        s.bilateral.push_back(BilateralSample::from_thighs(0.3, -0.2, 0.0, t));
    }
    return s;
}

std::vector<HsEvent> run(HsDetector& det, const Stream& s) {
    std::vector<HsEvent> out;
    for (std::size_t i = 0; i < s.imu.size(); ++i)
        for (const auto& e : det.step(s.imu[i], s.bilateral[i])) out.push_back(e);
    return out;
}

}  // namespace

TEST_CASE("refractory gate boundaries") {
    RefractoryGate g(0.4);
    CHECK(refractory_check(g, Side::left, 0.0));
    g.record(Side::left, 0.0);
    CHECK_FALSE(refractory_check(g, Side::left, 0.2));
    CHECK(refractory_check(g, Side::left, 0.41));
    CHECK(refractory_check(g, Side::right, 0.2));
    g.reset();
    CHECK(refractory_check(g, Side::left, 0.1));
}

TEST_CASE("periodic thigh spikes are detected once each") {
    const auto s = left_spikes(20.0, 1.0, 0.75, 1.0, 1);
    HsDetector det;
    const auto ev = run(det, s);
    std::size_t left = 0;
    for (const auto& e : ev) {
        if (e.side != Side::left) continue;
        ++left;
        const double nearest = std::round(e.timestamp - 0.75) + 0.75;
        REQUIRE(std::abs(e.timestamp - nearest) <= 0.004 + 1e-12);
        REQUIRE(e.source != HsSource::pelvis);
        REQUIRE(e.thigh_snapshot.timestamp == e.timestamp);
    }
    CHECK(left == 20);
}

TEST_CASE("events respect the refractory period") {
    // Spikes every 0.25 s: only every second one can pass a 0.4 s gate.
    const auto s = left_spikes(10.0, 0.25, 0.6, 1.0, 2);
    HsDetector det;
    const auto ev = run(det, s);
    REQUIRE(ev.size() >= 2);
    for (std::size_t i = 1; i < ev.size(); ++i)
        if (ev[i].side == ev[i - 1].side) REQUIRE(ev[i].timestamp - ev[i - 1].timestamp >= 0.4);
}

TEST_CASE("pelvis peaks go to the more flexed thigh") {
    HsDetector det;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-0.01, 0.01);
    std::vector<HsEvent> ev;
    for (int i = 0; i < 2500; ++i) {
        const double t = i / 250.0;
        const double d = std::abs(t - std::round(t));
        const double spike = 0.5 * std::exp(-(d / 0.008) * (d / 0.008));
        // Right thigh flexed during even seconds, left during odd ones.
        const bool right_lead = static_cast<long>(std::round(t)) % 2 == 0;
        const auto bi = right_lead ? BilateralSample::from_thighs(-0.2, 0.4, 0.0, t)
                                   : BilateralSample::from_thighs(0.4, -0.2, 0.0, t);
        for (const auto& e : det.step({u(rng), u(rng), u(rng) + spike, t}, bi)) ev.push_back(e);
    }
    REQUIRE(ev.size() >= 8);
    for (const auto& e : ev) {
        REQUIRE(e.source == HsSource::pelvis);
        const bool right_lead = static_cast<long>(std::round(e.timestamp)) % 2 == 0;
        REQUIRE(e.side == (right_lead ? Side::right : Side::left));
    }
}

TEST_CASE("detection is invariant to power-of-two amplitude scaling") {
    const auto base = left_spikes(15.0, 0.9, 0.6, 1.0, 4);
    for (double scale : {0.25, 2.0, 8.0}) {
        Stream scaled = base;
        for (auto& f : scaled.imu) {
            f.thigh_accel_normal_l *= scale;
            f.thigh_accel_normal_r *= scale;
            f.pelvis_accel *= scale;
        }
        HsDetector a, b;
        const auto ea = run(a, base);
        const auto eb = run(b, scaled);
        REQUIRE(ea.size() == eb.size());
        for (std::size_t i = 0; i < ea.size(); ++i) {
            REQUIRE(ea[i].timestamp == eb[i].timestamp);
            REQUIRE(ea[i].side == eb[i].side);
        }
    }
}

TEST_CASE("flat stream yields no events") {
    HsDetector det;
    for (int i = 0; i < 1000; ++i) REQUIRE(det.step({0.0, 0.0, 0.0, i / 250.0}, {}).empty());
}

TEST_CASE("reset clears history") {
    const auto s = left_spikes(6.0, 1.0, 0.75, 1.0, 5);
    HsDetector det;
    const auto first = run(det, s);
    det.reset();
    const auto second = run(det, s);
    REQUIRE(first.size() == second.size());
    for (std::size_t i = 0; i < first.size(); ++i) REQUIRE(first[i].timestamp == second[i].timestamp);
}

TEST_CASE("detector rejects non-increasing timestamps") {
    HsDetector det;
    det.step({0.0, 0.0, 0.0, 1.0}, {});
    CHECK_THROWS_AS(det.step({0.0, 0.0, 0.0, 1.0}, {}), StreamError);
    CHECK_THROWS_AS(det.step({0.0, 0.0, 0.0, 0.5}, {}), StreamError);
}

TEST_CASE("detector config validation") {
    HsDetectorConfig c;
    c.mad_k = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.confirm_samples = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.min_history_s = 3.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.refractory_s = -0.1;
    CHECK_THROWS_AS(c.validate(), ConfigError);
}
