#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "sonarflow/error.hpp"
#include "sonarflow/sonar_io.hpp"
#include "sonarflow/tracking.hpp"

using namespace sonarflow;
using fixture::ScratchDir;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Manifest manifest_for(std::vector<std::string> frames) {
    Manifest m;
    m.calibration.fps = 10.0;
    m.calibration.meters_per_pixel = 0.0029;
    m.calibration.fov_azimuth_deg = 28.8;
    m.calibration.range_min_m = 0.1;
    m.calibration.range_max_m = 1.0;
    m.frames = std::move(frames);
    return m;
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("uniform frames normalize by 1/255 and calibration is verbatim") {
    ScratchDir dir("io-uniform");
    std::vector<std::string> names;
    for (int i = 0; i < 3; ++i) {
        names.push_back("f" + std::to_string(i) + ".pgm");
        write_pgm(dir / names.back(), Grid<std::uint8_t>(8, 8, 128));
    }
    write_manifest(dir / "manifest.json", manifest_for(names));
    const Sequence seq = load_sequence(dir / "manifest.json");
    REQUIRE(seq.size() == 3);
    for (const Frame& f : seq.frames) {
        CHECK(f.width() == 8);
        for (double v : f.intensities.pixels()) REQUIRE(v == 128.0 / 255.0);
    }
    CHECK(seq.frames[2].index == 2);
    CHECK(seq.frames[2].timestamp_s == doctest::Approx(0.2));
    CHECK(seq.calibration.fps == 10.0);
    CHECK(seq.calibration.meters_per_pixel == 0.0029);
}

TEST_CASE("png frames load like pgm frames") {
    ScratchDir dir("io-png");
    Grid<std::uint8_t> img(5, 4);
    for (std::size_t i = 0; i < img.size(); ++i) img[i] = static_cast<std::uint8_t>(i * 11);
    write_png_gray(dir / "a.png", img);
    write_pgm(dir / "b.pgm", img);
    CHECK(read_gray8(dir / "a.png") == img);
    CHECK(read_gray8(dir / "b.pgm") == img);
}

TEST_CASE("mixed frame sizes are rejected") {
    ScratchDir dir("io-mixed");
    write_pgm(dir / "a.pgm", Grid<std::uint8_t>(8, 8, 1));
    write_pgm(dir / "b.pgm", Grid<std::uint8_t>(9, 8, 1));
    write_manifest(dir / "manifest.json", manifest_for({"a.pgm", "b.pgm"}));
    CHECK_THROWS_AS(load_sequence(dir / "manifest.json"), IoError);
}

TEST_CASE("missing manifest and malformed manifest") {
    ScratchDir dir("io-missing");
    CHECK_THROWS_AS(load_sequence(dir / "nope.json"), IoError);
    std::ofstream(dir / "bad.json") << "{\"version\": 1, \"fps\": 10}";
    CHECK_THROWS_AS(load_sequence(dir / "bad.json"), IoError);
    write_manifest(dir / "m.json", manifest_for({"absent.pgm"}));
    CHECK_THROWS_AS(load_sequence(dir / "m.json"), IoError);
}

TEST_CASE("color input is rejected") {
    ScratchDir dir("io-color");
    write_png_rgb(dir / "c.png", 2, 2, std::vector<std::uint8_t>(12, 50));
    CHECK_THROWS_AS(read_gray8(dir / "c.png"), IoError);
}

TEST_CASE("sequence round trip through save and load") {
    ScratchDir dir("io-seq");
    Sequence seq;
    seq.calibration.range_max_m = 0.8;
    for (int i = 0; i < 4; ++i) {
        Frame f;
        f.intensities = from_gray8(to_gray8(fixture::random_image(12, 10, 100 + i)));
        f.index = i;
        f.timestamp_s = i / seq.calibration.fps;
        seq.frames.push_back(f);
    }
    const auto manifest = save_sequence(seq, dir.path());
    const Sequence back = load_sequence(manifest, 3);
    REQUIRE(back.size() == seq.size());
    for (std::size_t i = 0; i < seq.size(); ++i) CHECK(back.frames[i].intensities == seq.frames[i].intensities);
    CHECK(back.calibration.range_max_m == 0.8);
}

TEST_CASE("gt boxes come back sorted") {
    ScratchDir dir("io-gt");
    std::vector<GtBox> boxes;
    for (int f = 9; f >= 0; --f) boxes.push_back({f, 0, 20.0 + f, 30.0, 10.0, 8.0});
    save_gt(dir / "gt.json", boxes);
    const auto back = load_gt(dir / "gt.json", ImageSize{64, 64});
    REQUIRE(back.size() == 10);
    for (int f = 0; f < 10; ++f) {
        CHECK(back[f].frame_index == f);
        CHECK(back[f].cx == 20.0 + f);
    }
}

TEST_CASE("duplicate gt boxes are rejected") {
    ScratchDir dir("io-gt-dup");
    save_gt(dir / "gt.json", {{3, 0, 10, 10, 4, 4}, {3, 0, 11, 10, 4, 4}});
    CHECK_THROWS_AS(load_gt(dir / "gt.json"), InputError);
}

TEST_CASE("out of bounds gt box is rejected") {
    ScratchDir dir("io-gt-oob");
    save_gt(dir / "gt.json", {{0, 1, 62, 10, 8, 4}});
    CHECK_NOTHROW(load_gt(dir / "gt.json"));
    CHECK_THROWS_AS(load_gt(dir / "gt.json", ImageSize{64, 64}), InputError);
}

TEST_CASE("gt advancing 7.93 px per frame implies 0.23 m/s") {
    ImageCalibration cal;
    const double step = 0.23 / (0.0029 * 10.0);
    CHECK(step == doctest::Approx(7.931).epsilon(1e-4));
    CHECK(speed_from_displacement(step, 0.0, cal) == doctest::Approx(0.23).epsilon(1e-12));
}

TEST_CASE("empty track list writes only the header") {
    ScratchDir dir("io-empty");
    write_tracks({}, dir / "t.csv");
    CHECK(slurp(dir / "t.csv") == "frame,target_id,cx_px,cy_px,u_px,v_px,speed_mps\n");
    CHECK(read_tracks(dir / "t.csv").empty());
}

TEST_CASE("single record round trip") {
    ScratchDir dir("io-one");
    const TrackRecord r{7, 3, 12.25, 99.5, -1.125, 7.931, 0.23};
    write_tracks({r}, dir / "t.csv");
    const auto back = read_tracks(dir / "t.csv");
    REQUIRE(back.size() == 1);
    CHECK(back[0].frame_index == 7);
    CHECK(back[0].target_id == 3);
    CHECK(std::abs(back[0].cx - r.cx) <= 1e-6);
    CHECK(std::abs(back[0].v - r.v) <= 1e-6);
    CHECK(std::abs(back[0].speed_mps - r.speed_mps) <= 1e-6);
}

TEST_CASE("1000 random records round trip") {
    ScratchDir dir("io-random");
    std::mt19937 rng(42);
    std::uniform_real_distribution<double> pos(0.0, 640.0), disp(-30.0, 30.0), spd(0.0, 2.0);
    std::uniform_int_distribution<int> frame(0, 5000), id(0, 50);
    std::vector<TrackRecord> recs(1000);
    for (auto& r : recs) r = {frame(rng), id(rng), pos(rng), pos(rng), disp(rng), disp(rng), spd(rng)};
    write_tracks(recs, dir / "t.csv");
    const auto back = read_tracks(dir / "t.csv");
    REQUIRE(back.size() == recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) {
        REQUIRE(back[i].frame_index == recs[i].frame_index);
        REQUIRE(back[i].target_id == recs[i].target_id);
        REQUIRE(std::abs(back[i].cx - recs[i].cx) <= 1e-6);
        REQUIRE(std::abs(back[i].cy - recs[i].cy) <= 1e-6);
        REQUIRE(std::abs(back[i].u - recs[i].u) <= 1e-6);
        REQUIRE(std::abs(back[i].v - recs[i].v) <= 1e-6);
        REQUIRE(std::abs(back[i].speed_mps - recs[i].speed_mps) <= 1e-6);
    }
}

TEST_CASE("malformed tracks rows are rejected") {
    ScratchDir dir("io-badcsv");
    std::ofstream(dir / "a.csv") << "frame,target_id,cx_px,cy_px,u_px,v_px,speed_mps\n1,2,3\n";
    CHECK_THROWS_AS(read_tracks(dir / "a.csv"), IoError);
    std::ofstream(dir / "b.csv") << "frame,id\n";
    CHECK_THROWS_AS(read_tracks(dir / "b.csv"), IoError);
}

TEST_CASE("loading is deterministic") {
    ScratchDir dir("io-det");
    write_pgm(dir / "a.pgm", to_gray8(fixture::random_image(16, 16, 5)));
    write_pgm(dir / "b.pgm", to_gray8(fixture::random_image(16, 16, 6)));
    write_manifest(dir / "manifest.json", manifest_for({"a.pgm", "b.pgm"}));
    const auto s1 = load_sequence(resolve_manifest_path(dir.path()), 1);
    const auto s2 = load_sequence(dir / "manifest.json", 4);
    for (std::size_t i = 0; i < s1.size(); ++i) CHECK(s1.frames[i].intensities == s2.frames[i].intensities);
    CHECK(sha256_file(dir / "a.pgm") == sha256_file(dir / "a.pgm"));
    CHECK(sha256_file(dir / "a.pgm").size() == 64);
}

TEST_CASE("sha256 of a known string") {
    ScratchDir dir("io-sha");
    std::ofstream(dir / "abc.txt", std::ios::binary) << "abc";
    CHECK(sha256_file(dir / "abc.txt") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

}
