#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <sstream>

#include "hipexo/gait_data.hpp"

using namespace hipexo;
using Catch::Matchers::WithinAbs;

namespace {

constexpr double kFs = 250.0;

// Ten stance bumps, 1.1 s apart, each 0.6 s long. Optional chatter around
// the contact threshold right after toe-off.
std::string grf_trial_csv(bool chatter) {
    std::ostringstream out;
    out << "time,grf,hip_deg,moment_nm\n";
    const std::size_t n = static_cast<std::size_t>(11.5 * kFs);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / kFs;
        const double local = std::fmod(t - 0.2 + 11.0, 1.1);
        double grf = (t >= 0.2 && t < 0.2 + 11.0 && local < 0.6) ? 700.0 : 0.0;
        if (chatter && t >= 0.2 && local >= 0.6 && local < 0.65) grf = (i % 2) ? 40.0 : 30.0;
        out << csv::format_double(t) << ',' << csv::format_double(grf) << ','
            << csv::format_double(30.0 * std::sin(2.0 * std::numbers::pi * t / 1.1)) << ','
            << csv::format_double(70.0 * std::cos(2.0 * std::numbers::pi * t / 1.1)) << '\n';
    }
    return out.str();
}

TrialSchema grf_schema() {
    return TrialSchema::from_json(nlohmann::json::parse(R"({
        "task": "LG 1.15", "body_mass": 70, "time_column": "time",
        "channels": {
            "grf_vertical": {"column": "grf", "unit": "N"},
            "hip_angle": {"column": "hip_deg", "unit": "deg"},
            "hip_moment": {"column": "moment_nm", "unit": "Nm"}
        },
        "required": ["grf_vertical", "hip_angle", "hip_moment"]
    })"));
}

}  // namespace

TEST_CASE("activity labels") {
    CHECK(to_string(parse_activity("LG 0.85")) == "LG 0.85");
    CHECK(to_string(parse_activity(" RA_11 ")) == "RA 11");
    CHECK(parse_activity("STS").kind == ActivityKind::sit_to_stand);
    CHECK(parse_activity("SD 7").is_descent());
    CHECK_FALSE(parse_activity("SA 7").is_descent());
    CHECK_THROWS_AS(parse_activity("XX 1"), ConfigError);
    CHECK_THROWS_AS(parse_activity("RA"), ConfigError);
    CHECK_THROWS_AS(parse_activity("RA 45"), ConfigError);
}

TEST_CASE("ten contacts give nine strides") {
    std::istringstream in(grf_trial_csv(false));
    const auto trial = load_trial(in, grf_schema());
    CHECK_THAT(trial.sample_rate_hz, WithinAbs(kFs, 1e-6));
    const auto strides = segment_strides(trial);
    REQUIRE(strides.size() == 9);
    for (const auto& s : strides) {
        CHECK_THAT(s.duration, WithinAbs(1.1, 0.005));
        CHECK_FALSE(s.flagged);
    }
}

TEST_CASE("threshold chatter is debounced") {
    std::istringstream in(grf_trial_csv(true));
    const auto strides = segment_strides(load_trial(in, grf_schema()));
    CHECK(strides.size() == 9);
}

TEST_CASE("unit conversion") {
    std::istringstream in(grf_trial_csv(false));
    const auto trial = load_trial(in, grf_schema());
    const auto& deg = trial.at(channel::hip_angle);
    const auto& moment = trial.at(channel::hip_moment);
    for (std::size_t i = 0; i < deg.size(); i += 37) {
        const double t = static_cast<double>(i) / kFs;
        const double src = csv::parse_double(csv::format_double(30.0 * std::sin(2.0 * std::numbers::pi * t / 1.1)));
        REQUIRE_THAT(deg[i] * 180.0 / std::numbers::pi, WithinAbs(src, 1e-12));
        const double m = csv::parse_double(csv::format_double(70.0 * std::cos(2.0 * std::numbers::pi * t / 1.1)));
        REQUIRE_THAT(moment[i], WithinAbs(m / 70.0, 1e-12));
    }
    CHECK(unit_factor("grf_vertical", "BW", std::nullopt) == kGravity);
    CHECK_THROWS_AS(unit_factor("hip_moment", "Nm", std::nullopt), ConfigError);
    CHECK_THROWS_AS(unit_factor("hip_angle", "Nm", 70.0), DataError);
}

TEST_CASE("missing required channel") {
    auto schema = grf_schema();
    schema.channels["knee_moment"] = {"knee_nm", "Nm"};
    schema.required.push_back("knee_moment");
    std::istringstream in(grf_trial_csv(false));
    try {
        load_trial(in, schema, "trial.csv");
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK_THAT(e.what(), Catch::Matchers::ContainsSubstring("knee_moment"));
    }
}

TEST_CASE("short NaN runs are filled, long ones rejected") {
    const auto schema = TrialSchema::from_json(
        nlohmann::json::parse(R"({"sample_rate_hz": 100, "channels": {"hip_angle": {"column": "h", "unit": "rad"}}})"));
    std::ostringstream ok;
    ok << "h\n0\n1\nnan\nnan\nnan\nnan\nnan\n7\n8\n";
    std::istringstream in_ok(ok.str());
    const auto t = load_trial(in_ok, schema);
    const auto& h = t.at(channel::hip_angle);
    for (std::size_t i = 0; i < h.size(); ++i) CHECK_THAT(h[i], WithinAbs(static_cast<double>(i), 1e-12));

    std::istringstream in_bad("h\n0\nnan\nnan\nnan\nnan\nnan\nnan\n7\n");
    CHECK_THROWS_AS(load_trial(in_bad, schema), DataError);
}

TEST_CASE("non-uniform time column is rejected") {
    const auto schema = TrialSchema::from_json(nlohmann::json::parse(
        R"({"time_column": "t", "channels": {"hip_angle": {"column": "h", "unit": "rad"}}})"));
    std::istringstream in("t,h\n0,0\n0.01,0\n0.03,0\n0.04,0\n");
    CHECK_THROWS_AS(load_trial(in, schema), DataError);
}

TEST_CASE("schema validation") {
    CHECK_THROWS_AS(TrialSchema::from_json(nlohmann::json::parse(R"({"channels": {}})")), ConfigError);
    CHECK_THROWS_AS(TrialSchema::from_json(nlohmann::json::parse(
                        R"({"sample_rate_hz": 100, "channels": {"elbow": {"column": "e", "unit": "rad"}}})")),
                    ConfigError);
}

TEST_CASE("linear resampling") {
    std::vector<double> x(500);
    for (std::size_t i = 0; i < x.size(); ++i)
        x[i] = std::sin(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(x.size() - 1));
    const auto y = resample_linear(x, 0, x.size() - 1, 101);
    REQUIRE(y.size() == 101);
    double worst = 0.0;
    for (std::size_t k = 0; k < y.size(); ++k)
        worst = std::max(worst, std::abs(y[k] - std::sin(2.0 * std::numbers::pi * static_cast<double>(k) / 100.0)));
    CHECK(worst < 1e-3);
    CHECK(y.front() == x.front());
    CHECK(y.back() == x.back());

    const std::vector<double> ramp{0.0, 1.0, 2.0, 3.0, 4.0};
    const auto r = resample_linear(ramp, 1, 3, 5);
    for (std::size_t k = 0; k < r.size(); ++k) CHECK_THAT(r[k], WithinAbs(1.0 + 0.5 * static_cast<double>(k), 1e-15));
}

TEST_CASE("stride normalization") {
    std::istringstream in(grf_trial_csv(false));
    const auto trial = load_trial(in, grf_schema());
    const auto ranges = segment_strides(trial);
    const auto s = normalize_stride(trial, ranges[2]);
    CHECK(s.size() == kDefaultStrideSamples);
    CHECK(s.label == parse_activity("LG 1.15"));
    CHECK_THAT(s.cycle_duration, WithinAbs(1.1, 0.005));
    CHECK(s.at(channel::hip_angle).front() == trial.at(channel::hip_angle)[ranges[2].begin]);
    CHECK_THROWS_AS(normalize_stride(trial, ranges[2], 20), ContractError);
}

TEST_CASE("stride files round-trip bit-exactly") {
    StrideSeries s;
    s.label = parse_activity("RD 5.2");
    s.body_mass = 63.5;
    s.cycle_duration = 1.234;
    for (const char* name : {channel::hip_angle, channel::hip_moment, channel::hip_velocity}) {
        auto& v = s.channels[name];
        for (int i = 0; i < 101; ++i) v.push_back(std::sin(0.1 * i + name[4]) / 3.0);
    }
    const auto dir = std::filesystem::temp_directory_path() / "hipexo_test_gait_data";
    std::filesystem::create_directories(dir);
    const auto path = (dir / "stride.csv").string();
    write_stride(path, s, {"tool test"}, nlohmann::json{{"seed", 4}});
    const auto back = read_stride(path);
    CHECK(back.label == s.label);
    CHECK(back.body_mass == s.body_mass);
    CHECK(back.cycle_duration == s.cycle_duration);
    CHECK(back.channels == s.channels);
    std::filesystem::remove(path + ".meta.json");
    CHECK_THROWS_AS(read_stride(path), DataError);
    std::filesystem::remove_all(dir);
}
