#include <fstream>
#include <iterator>
#include <sstream>

#include "cli.hpp"
#include "doctest.h"
#include "fixtures.hpp"
#include "json.hpp"
#include "sonarflow/config.hpp"
#include "sonarflow/error.hpp"
#include "sonarflow/synth.hpp"

using namespace sonarflow;
using sonarflow::cli::ExitCode;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result run_cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string bytes_of(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

SynthScene small_scene() {
    SynthScene s;
    s.name = "small";
    s.width = 160;
    s.height = 128;
    s.calibration.fov_azimuth_deg = 120;
    s.calibration.range_min_m = 0.03;
    s.calibration.range_max_m = 0.6;
    s.duration_frames = 10;
    s.rng_seed = 5;
    SynthTarget t;
    t.shape.len = 32;
    t.shape.width = 12;
    t.path.start_x = 40;
    t.path.start_y = 70;
    t.path.velocity_x_mps = 0.15;
    s.targets.push_back(t);
    return s;
}

/// Writes the small scene into dir/scene and returns that directory.
std::filesystem::path small_input(const fixture::ScratchDir& dir) {
    std::ofstream(dir / "small.json") << scene_to_json(small_scene());
    const auto r = run_cli({"synth", "--config", (dir / "small.json").string(), "--out", (dir / "scene").string()});
    REQUIRE(r.code == 0);
    return dir / "scene";
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("usage errors exit 1") {
    CHECK(run_cli({}).code == ExitCode::usage);
    CHECK(run_cli({"frobnicate"}).code == ExitCode::usage);
    CHECK(run_cli({"track", "--out", "x"}).code == ExitCode::usage);
    const auto r = run_cli({"demo", "--preset", "sideways"});
    CHECK(r.code == ExitCode::usage);
    CHECK(r.err.find("horizontal-bottle") != std::string::npos);
    CHECK(r.err.find("crosstalk-demo") != std::string::npos);
}

TEST_CASE("help exits 0") {
    const auto r = run_cli({"--help"});
    CHECK(r.code == ExitCode::ok);
    CHECK(r.out.find("track") != std::string::npos);
}

TEST_CASE("missing manifest exits 2") {
    fixture::ScratchDir dir("cli-missing");
    const auto r = run_cli({"track", "--input", (dir / "nowhere").string(), "--out", (dir / "out").string()});
    CHECK(r.code == ExitCode::io_failure);
    CHECK_FALSE(r.err.empty());
}

TEST_CASE("invalid flags exit 1 before any work") {
    fixture::ScratchDir dir("cli-stride");
    const auto input = small_input(dir);
    auto r = run_cli({"track", "--input", input.string(), "--out", (dir / "out").string(), "--stride", "0"});
    CHECK(r.code == ExitCode::usage);
    CHECK(r.err.find("stride") != std::string::npos);
    CHECK_FALSE(std::filesystem::exists(dir / "out" / "tracks.csv"));
    r = run_cli({"track", "--input", input.string(), "--out", (dir / "out").string(), "--inpaint", "ns"});
    CHECK(r.code == ExitCode::usage);
    r = run_cli({"track", "--input", input.string(), "--out", (dir / "out").string(), "--log-level", "loud"});
    CHECK(r.code == ExitCode::usage);
}

TEST_CASE("pipeline failure exits 3") {
    fixture::ScratchDir dir("cli-short");
    const auto input = small_input(dir);
    const auto r = run_cli({"track", "--input", input.string(), "--out", (dir / "out").string(), "--stride", "12"});
    CHECK(r.code == ExitCode::pipeline_failure);
}

TEST_CASE("track, eval and render on generated data") {
    fixture::ScratchDir dir("cli-flow");
    const auto input = small_input(dir);
    const auto out = dir / "out";
    auto r = run_cli({"track", "--input", input.string(), "--out", out.string()});
    REQUIRE(r.code == ExitCode::ok);
    const auto recs = read_tracks(out / "tracks.csv");
    CHECK_FALSE(recs.empty());

    const auto meta = nlohmann::json::parse(bytes_of(out / "run_metadata.json"));
    CHECK(meta["command"] == "track");
    CHECK(meta["pipeline"]["fb_levels"] == 4);
    CHECK(meta["input"]["sha256"].size() == 11);

    r = run_cli({"eval", "--input", input.string(), "--tracks", (out / "tracks.csv").string(), "--gt",
                 (input / "gt.json").string()});
    REQUIRE(r.code == ExitCode::ok);
    CHECK(std::filesystem::exists(out / "report.json"));
    CHECK(r.out.find("rmse_px") != std::string::npos);

    r = run_cli({"render", "--input", input.string(), "--tracks", (out / "tracks.csv").string(), "--gt",
                 (input / "gt.json").string(), "--out", (dir / "viz").string(), "--flow-every", "5", "--stages"});
    REQUIRE(r.code == ExitCode::ok);
    CHECK(std::filesystem::exists(dir / "viz" / "overlay_0009.png"));
}

TEST_CASE("tracks.csv does not depend on the thread count") {
    fixture::ScratchDir dir("cli-threads");
    const auto input = small_input(dir);
    REQUIRE(run_cli({"track", "--input", input.string(), "--out", (dir / "t1").string(), "--threads", "1"}).code == 0);
    REQUIRE(run_cli({"track", "--input", input.string(), "--out", (dir / "t4").string(), "--threads", "4"}).code == 0);
    CHECK(bytes_of(dir / "t1" / "tracks.csv") == bytes_of(dir / "t4" / "tracks.csv"));
}

TEST_CASE("flags override the config file, which overrides defaults") {
    fixture::ScratchDir dir("cli-config");
    const auto input = small_input(dir);
    std::ofstream(dir / "cfg.json") << R"({"fb_levels": 2, "max_gap": 5})";
    REQUIRE(run_cli({"track", "--input", input.string(), "--out", (dir / "a").string(), "--config",
                     (dir / "cfg.json").string(), "--fb-levels", "3"})
                .code == 0);
    auto meta = nlohmann::json::parse(bytes_of(dir / "a" / "run_metadata.json"));
    CHECK(meta["pipeline"]["fb_levels"] == 3);
    CHECK(meta["pipeline"]["max_gap"] == 5);
    CHECK(meta["pipeline"]["fb_win"] == 15);

    REQUIRE(run_cli({"track", "--input", input.string(), "--out", (dir / "b").string(), "--config",
                     (dir / "a" / "run_metadata.json").string()})
                .code == 0);
    meta = nlohmann::json::parse(bytes_of(dir / "b" / "run_metadata.json"));
    CHECK(meta["pipeline"]["fb_levels"] == 3);
    CHECK(bytes_of(dir / "a" / "tracks.csv") == bytes_of(dir / "b" / "tracks.csv"));

    std::ofstream(dir / "bad.json") << R"({"fb_levelz": 2})";
    CHECK(run_cli({"track", "--input", input.string(), "--out", (dir / "c").string(), "--config",
                   (dir / "bad.json").string()})
              .code == ExitCode::usage);
}

TEST_CASE("config json round trip") {
    PipelineConfig cfg;
    cfg.flow.levels = 2;
    cfg.tracker.crosstalk_rejection = false;
    cfg.preprocess.inpaint.reset();
    const PipelineConfig back = pipeline_config_from_json(pipeline_config_to_json(cfg));
    CHECK(pipeline_config_to_json(back) == pipeline_config_to_json(cfg));
    CHECK_THROWS_AS(pipeline_config_from_json(R"({"stride": "two"})"), InputError);
}

TEST_CASE("demo prints a table row per target") {
    fixture::ScratchDir dir("cli-demo");
    const auto r = run_cli({"demo", "--preset", "horizontal-bottle", "--run-dir", (dir / "run").string(),
                            "--no-render"});
    REQUIRE(r.code == ExitCode::ok);
    CHECK(r.out.find("horizontal-bottle") != std::string::npos);
    CHECK(r.out.find("0.230") != std::string::npos);
    CHECK(std::filesystem::exists(dir / "run" / "horizontal-bottle" / "report.json"));
}

}
