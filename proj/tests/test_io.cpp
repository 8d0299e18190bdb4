#include <gtest/gtest.h>
#include <unistd.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "nlobs/error.hpp"
#include "nlobs/io.hpp"
#include "nlobs/pipeline.hpp"
#include "nlobs/random.hpp"

using namespace nlobs;

namespace {

Json base_config() {
    return Json::parse(R"({
      "geometry": {"omega": [[-1, 1]], "omega_prime": [-2, 2], "n_cells": 32},
      "kernel": {"s": 0.4, "p": 2},
      "data": {"form": {"kind": "constant", "value": 0}},
      "obstacle": {"kind": "constant", "value": 1},
      "seed": 7,
      "pipeline": ["solve"]
    })");
}

void expect_config_error(Json j) { EXPECT_THROW(parse_config(j), ConfigError) << j.dump(); }

}  // namespace

TEST(FormatDouble, RoundTripsExactly) {
    SampleStream rng(3);
    for (int k = 0; k < 10000; ++k) {
        const double v = rng.uniform(-1.0, 1.0) * std::pow(10.0, static_cast<int>(rng.unit() * 40) - 20);
        const std::string s = format_double(v);
        double back = 0.0;
        std::from_chars(s.data(), s.data() + s.size(), back);
        EXPECT_EQ(back, v) << s;
    }
    EXPECT_EQ(format_double(0.5), "0.5");
    EXPECT_EQ(format_double(-std::numeric_limits<double>::infinity()), "-inf");
}

TEST(Parsers, SectionsRoundTrip) {
    const Json geom = {{"omega", {{-1.0, -0.2}, {0.2, 1.0}}}, {"omega_prime", {-2.0, 2.0}}, {"n_cells", 64}};
    EXPECT_EQ(to_json(geometry_from_json(geom)), geom);

    const Json kernel = Json::parse(R"({"s": 0.3, "p": 3, "lambda": 2,
        "coefficient": {"kind": "checkerboard", "low": 1, "high": 2, "period": 0.5}})");
    EXPECT_EQ(to_json(kernel_from_json(kernel)), kernel);

    for (const char* d : {R"({"form": {"kind": "power_plus", "beta": 0.5}})",
                          R"({"form": {"kind": "indicator", "set": [[1.5, 3]], "value": 2}, "R_inf": 10})",
                          R"({"form": {"kind": "table", "x": [0, 1], "values": [1, 2]}})"}) {
        const Json j = Json::parse(d);
        EXPECT_EQ(to_json(data_from_json(j)), j);
    }

    const Json holder = {{"kind", "holder"}, {"center", 0.0}, {"offset", 1.0}, {"scale", 2.0}, {"exponent", 0.3}};
    EXPECT_EQ(to_json(obstacle_from_json(holder)), holder);
    const auto h = obstacle_function(obstacle_from_json(holder));
    EXPECT_DOUBLE_EQ(h(0.5), 1.0 - 2.0 * std::pow(0.5, 0.3));
    EXPECT_FALSE(obstacle_function(obstacle_from_json(nullptr)));
}

TEST(Parsers, TableObstacleInterpolatesAndClamps) {
    const auto h = obstacle_function(obstacle_from_json(Json::parse(R"({"kind": "table", "x": [0, 1, 3], "values": [0, 2, 0]})")));
    EXPECT_DOUBLE_EQ(h(-5), 0.0);
    EXPECT_DOUBLE_EQ(h(0.5), 1.0);
    EXPECT_DOUBLE_EQ(h(2.0), 1.0);
    EXPECT_DOUBLE_EQ(h(9), 0.0);
}

TEST(Parsers, RejectInvalidSections) {
    EXPECT_THROW(geometry_from_json(Json::parse(R"({"omega": [[-1, 1]], "omega_prime": [-2, 2]})")), ConfigError);
    EXPECT_THROW(geometry_from_json(Json::parse(R"({"omega": [[-3, 1]], "omega_prime": [-2, 2], "n_cells": 8})")),
                 ConfigError);
    EXPECT_THROW(kernel_from_json(Json::parse(R"({"s": 1.5, "p": 2})")), ConfigError);
    EXPECT_THROW(kernel_from_json(Json::parse(R"({"s": 0.5, "p": 2, "coefficient": {"kind": "magic"}})")), ConfigError);
    EXPECT_THROW(data_from_json(Json::parse(R"({"form": {"kind": "constant"}})")), ConfigError);
    EXPECT_THROW(obstacle_from_json(Json::parse(R"({"kind": "holder", "exponent": 2})")), ConfigError);
    EXPECT_THROW(solver_from_json(Json::parse(R"({"tol": 0})")), ConfigError);
    EXPECT_THROW(solver_from_json(Json::parse(R"({"scalar_solver": "secant"})")), ConfigError);
}

TEST(Pipeline, RejectsInvalidPipelinesAtomically) {
    EXPECT_NO_THROW(parse_config(base_config()));
    auto with = [](Json steps) {
        Json j = base_config();
        j["pipeline"] = steps;
        return j;
    };
    expect_config_error(with(Json::array()));
    expect_config_error(with({"solve", "teleport"}));
    // A prerequisite missing anywhere rejects the whole pipeline, even after valid steps.
    expect_config_error(with({"uniqueness", "supersolution", "solve"}));
    expect_config_error(with({"solve", {{"step", "caccioppoli"}, {"x0", 0.3}, {"r", 0.5}}}));
    expect_config_error(with({"solve", {{"step", "probe-sup"}, {"x0", 0.0}}}));
    expect_config_error(with({"solve", {{"step", "supersolution"}, {"tolerance", 1}}}));
    expect_config_error(with({{{"step", "study"}, {"resolutions", {32, 48, 96}}}}));

    Json no_obstacle = with({"solve", "contact-free"});
    no_obstacle.erase("obstacle");
    expect_config_error(no_obstacle);

    Json unknown = base_config();
    unknown["extra"] = 1;
    expect_config_error(unknown);

    Json lemmas_only = {{"pipeline", {{{"step", "validate-lemmas"}, {"p", {2.0}}, {"samples", 10}}}}};
    EXPECT_NO_THROW(parse_config(lemmas_only));
    lemmas_only["pipeline"][0]["p"] = {1.0};
    expect_config_error(lemmas_only);
}

TEST(Pipeline, OverridesRevalidate) {
    auto cfg = parse_config(base_config());
    apply_overrides(cfg, 99u, 64u);
    EXPECT_EQ(cfg.seed, 99u);
    EXPECT_EQ(cfg.geometry.at("n_cells"), 64);
    EXPECT_THROW(apply_overrides(cfg, std::nullopt, 0u), ConfigError);
}

TEST(Pipeline, ChiExampleWritesIndicatorAndManifest) {
    const auto dir = std::filesystem::temp_directory_path() / ("nlobs-io-" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    Json j = base_config();
    j["pipeline"] = {"solve", "supersolution", "contact-free"};
    const auto summary = run_pipeline(parse_config(j), {dir});
    EXPECT_EQ(summary.exit_code, 0);

    std::ifstream is(dir / "solution.csv");
    std::string line;
    std::getline(is, line);
    EXPECT_EQ(line, "cell_center,u,h,g,contact_flag,residual");
    int rows = 0;
    while (std::getline(is, line)) {
        std::stringstream ss(line);
        std::string x, u;
        std::getline(ss, x, ',');
        std::getline(ss, u, ',');
        const double xv = std::stod(x), uv = std::stod(u);
        EXPECT_NEAR(uv, std::fabs(xv) < 1.0 ? 1.0 : 0.0, 1e-8) << line;
        ++rows;
    }
    EXPECT_EQ(rows, 32);

    const Json manifest = Json::parse(std::ifstream(dir / "manifest.json"));
    EXPECT_EQ(manifest.at("seed"), 7);
    EXPECT_EQ(manifest.at("exit_code"), 0);
    EXPECT_EQ(manifest.at("steps").size(), 3u);
    EXPECT_EQ(manifest.at("config_hash").get<std::string>().size(), 64u);
    EXPECT_TRUE(manifest.at("versions").contains("simd"));
    for (const auto& s : manifest.at("steps")) EXPECT_EQ(s.at("status"), "passed");
    std::filesystem::remove_all(dir);
}

TEST(Pipeline, FailingStepKeepsGoingAndReportsExitOne) {
    const auto dir = std::filesystem::temp_directory_path() / ("nlobs-io-fail-" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    Json j = base_config();
    // The indicator example converges in one sweep; the parabola needs many.
    j["obstacle"] = {{"kind", "parabola"}};
    j["kernel"]["s"] = 0.6;
    j["solver"] = {{"max_sweeps", 1}};
    j["pipeline"] = {"solve", "supersolution"};
    const auto summary = run_pipeline(parse_config(j), {dir});
    EXPECT_EQ(summary.exit_code, 1);
    ASSERT_EQ(summary.steps.size(), 2u);
    EXPECT_EQ(summary.steps[0].status, StepStatus::Failed);
    EXPECT_TRUE(std::filesystem::exists(dir / "solution.csv"));
    EXPECT_EQ(Json::parse(std::ifstream(dir / "manifest.json")).at("exit_code"), 1);
    std::filesystem::remove_all(dir);
}
