#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "sonarflow/error.hpp"
#include "sonarflow/filters.hpp"
#include "sonarflow/preprocess.hpp"
#include "sonarflow/synth.hpp"

using namespace sonarflow;

namespace {

Frame frame_of(ImageF img, int index = 0) {
    Frame f;
    f.intensities = std::move(img);
    f.index = index;
    return f;
}

Sequence sequence_of(const std::vector<ImageF>& imgs) {
    Sequence s;
    for (std::size_t i = 0; i < imgs.size(); ++i) s.frames.push_back(frame_of(imgs[i], static_cast<int>(i)));
    return s;
}

HoleMask square_hole(int w, int h, int x0, int y0, int side) {
    HoleMask m(w, h, 0);
    for (int y = y0; y < y0 + side; ++y)
        for (int x = x0; x < x0 + side; ++x) m(x, y) = 1;
    return m;
}

double max_abs_diff(const ImageF& a, const ImageF& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

}  // namespace

TEST_SUITE("preprocess") {

TEST_CASE("background from one frame equals that frame") {
    const auto img = fixture::random_image(16, 12, 1);
    const auto bg = build_background(sequence_of({img, fixture::random_image(16, 12, 2)}), 1);
    CHECK(bg.background == img);
    CHECK(bg.n_frames_used == 1);
}

TEST_CASE("constant sequence gives constant background") {
    const ImageF c(10, 10, 0.37);
    const auto bg = build_background(sequence_of({c, c, c, c}), 4);
    for (double v : bg.background.pixels()) CHECK(v == 0.37);
}

TEST_CASE("median background ignores a transient blob") {
    std::vector<ImageF> imgs(5, ImageF(20, 20, 0.1));
    for (int y = 5; y < 10; ++y)
        for (int x = 5; x < 10; ++x) imgs[2](x, y) = 0.9;
    const auto bg = build_background(sequence_of(imgs), 5);
    for (double v : bg.background.pixels()) REQUIRE(v == 0.1);
}

TEST_CASE("background argument errors") {
    CHECK_THROWS_AS(build_background(Sequence{}, 1), InputError);
    const auto s = sequence_of({ImageF(4, 4), ImageF(4, 4)});
    CHECK_THROWS_AS(build_background(s, 0), InputError);
    CHECK_THROWS_AS(build_background(s, 3), InputError);
}

TEST_CASE("subtract_background arithmetic") {
    const auto img = fixture::random_image(12, 12, 3);
    BackgroundModel same{img, 1};
    for (double v : subtract_background(frame_of(img), same).intensities.pixels()) REQUIRE(v == 0.0);

    BackgroundModel zero{ImageF(12, 12, 0.0), 1};
    CHECK(subtract_background(frame_of(img, 4), zero).intensities == img);
    CHECK(subtract_background(frame_of(img, 4), zero).index == 4);

    BackgroundModel bg{ImageF(12, 12, 0.3), 1};
    for (double v : subtract_background(frame_of(ImageF(12, 12, 0.8)), bg).intensities.pixels())
        REQUIRE(v == doctest::Approx(0.5).epsilon(1e-15));

    const auto out = subtract_background(frame_of(fixture::random_image(12, 12, 4)),
                                         BackgroundModel{fixture::random_image(12, 12, 5), 1});
    for (double v : out.intensities.pixels()) REQUIRE((v >= 0.0 && v <= 1.0));

    CHECK_THROWS_AS(subtract_background(frame_of(ImageF(5, 5)), zero), InputError);
}

TEST_CASE("solid blob has no holes") {
    ImageF img(30, 30, 0.05);
    Mask roi(30, 30, 0);
    for (int y = 5; y < 25; ++y)
        for (int x = 5; x < 25; ++x) {
            img(x, y) = 0.8;
            roi(x, y) = 1;
        }
    const auto holes = detect_holes(frame_of(img), roi, 0.2);
    for (auto v : holes.pixels()) REQUIRE(v == 0);
}

TEST_CASE("interior dark patch is exactly the hole") {
    ImageF img(30, 30, 0.05);
    Mask roi(30, 30, 0);
    for (int y = 5; y < 25; ++y)
        for (int x = 5; x < 25; ++x) {
            img(x, y) = 0.8;
            roi(x, y) = 1;
        }
    for (int y = 12; y < 15; ++y)
        for (int x = 13; x < 16; ++x) img(x, y) = 0.05;
    img(20, 20) = 0.0;
    img(5, 10) = 0.0;
    const auto holes = detect_holes(frame_of(img), roi, 0.2);
    HoleMask expected = square_hole(30, 30, 13, 12, 3);
    expected(20, 20) = 1;
    CHECK(holes == expected);
}

TEST_CASE("dropout hole fraction on a synthetic capsule") {
    SynthScene scene;
    scene.width = 160;
    scene.height = 128;
    scene.calibration.fov_azimuth_deg = 120.0;
    scene.calibration.range_min_m = 0.03;
    scene.calibration.range_max_m = 0.9;
    scene.duration_frames = 10;
    scene.dropout_prob = 0.05;
    scene.rng_seed = 99;
    SynthTarget t;
    t.shape.kind = ShapeKind::capsule;
    t.shape.len = 48;
    t.shape.width = 16;
    t.path.start_x = 80;
    t.path.start_y = 60;
    scene.targets.push_back(t);
    const auto rendered = render_scene(scene);

    Mask roi(scene.width, scene.height, 0);
    long roi_area = 0;
    for (int y = 0; y < scene.height; ++y)
        for (int x = 0; x < scene.width; ++x) {
            const double px = std::clamp(static_cast<double>(x), 80.0 - 16.0, 80.0 + 16.0);
            if (std::hypot(x - px, y - 60.0) <= 8.0) {
                roi(x, y) = 1;
                ++roi_area;
            }
        }
    long holes = 0;
    for (const Frame& f : rendered.sequence.frames)
        for (auto v : detect_holes(f, roi, 0.15).pixels()) holes += v;
    const double fraction = static_cast<double>(holes) / (roi_area * scene.duration_frames);
    CHECK(fraction >= 0.03);
    CHECK(fraction <= 0.07);
}

TEST_CASE("inpaint fills a constant surround with the constant") {
    const ImageF img(24, 24, 0.7);
    ImageF noisy = img;
    const auto holes = square_hole(24, 24, 9, 8, 5);
    for (int y = 8; y < 13; ++y)
        for (int x = 9; x < 14; ++x) noisy(x, y) = 0.0;
    for (auto method : {InpaintMethod::telea, InpaintMethod::biharmonic}) {
        const auto out = inpaint(frame_of(noisy), holes, method);
        CHECK(max_abs_diff(out.intensities, img) <= 1e-6);
    }
}

TEST_CASE("biharmonic reproduces a ramp and agrees with the dense solve") {
    ImageF ramp(24, 24);
    for (int y = 0; y < 24; ++y)
        for (int x = 0; x < 24; ++x) ramp(x, y) = 0.1 + 0.02 * x + 0.01 * y;
    const auto holes = square_hole(24, 24, 8, 9, 6);
    ImageF damaged = ramp;
    for (int y = 9; y < 15; ++y)
        for (int x = 8; x < 14; ++x) damaged(x, y) = 0.0;
    const auto out = inpaint(frame_of(damaged), holes, InpaintMethod::biharmonic);
    const auto dense = oracle::biharmonic_fill(damaged, holes);
    CHECK(max_abs_diff(dense, ramp) <= 1e-9);
    CHECK(max_abs_diff(out.intensities, ramp) <= 1e-3);
    CHECK(max_abs_diff(out.intensities, dense) <= 1e-3);
}

TEST_CASE("biharmonic matches the dense solve on a curved surround") {
    const auto img = fixture::smooth_noise(28, 28, 17, 3.0);
    HoleMask holes(28, 28, 0);
    for (int y = 9; y < 19; ++y)
        for (int x = 7; x < 20; ++x)
            if (std::hypot(x - 13.0, y - 14.0) < 5.5) holes(x, y) = 1;
    const auto out = inpaint(frame_of(img), holes, InpaintMethod::biharmonic);
    CHECK(max_abs_diff(out.intensities, oracle::biharmonic_fill(img, holes)) <= 1e-3);
}

TEST_CASE("inpaint leaves non-hole pixels bit-exact") {
    const auto img = fixture::random_image(32, 32, 21);
    HoleMask holes(32, 32, 0);
    holes(4, 4) = holes(20, 7) = holes(21, 7) = holes(15, 25) = 1;
    for (auto method : {InpaintMethod::telea, InpaintMethod::biharmonic}) {
        const auto out = inpaint(frame_of(img), holes, method, 3);
        for (std::size_t i = 0; i < img.size(); ++i)
            if (!holes[i]) REQUIRE(out.intensities[i] == img[i]);
    }
}

TEST_CASE("empty hole mask is the identity") {
    const auto img = fixture::random_image(16, 16, 22);
    for (auto method : {InpaintMethod::telea, InpaintMethod::biharmonic})
        CHECK(inpaint(frame_of(img), HoleMask(16, 16, 0), method).intensities == img);
}

TEST_CASE("full hole mask has nothing to fill from") {
    CHECK_THROWS_AS(inpaint(frame_of(ImageF(8, 8, 0.5)), HoleMask(8, 8, 1), InpaintMethod::telea), InputError);
    CHECK_THROWS_AS(inpaint(frame_of(ImageF(8, 8, 0.5)), HoleMask(8, 8, 1), InpaintMethod::biharmonic),
                    InputError);
}

TEST_CASE("inpaint method names") {
    CHECK(parse_inpaint_method("telea") == InpaintMethod::telea);
    CHECK(parse_inpaint_method("biharmonic") == InpaintMethod::biharmonic);
    CHECK_FALSE(parse_inpaint_method("none").has_value());
    CHECK_THROWS_AS(parse_inpaint_method("ns"), InputError);
    CHECK(to_string(InpaintMethod::biharmonic) == "biharmonic");
}

TEST_CASE("guided filter matches the naive windowed reference") {
    for (unsigned seed : {31u, 32u, 33u}) {
        const auto p = fixture::random_image(16, 16, seed);
        const auto guide = fixture::random_image(16, 16, seed + 100);
        for (int r : {1, 2, 4}) {
            CHECK(max_abs_diff(guided_filter(p, guide, r, 1e-3), oracle::guided_filter(p, guide, r, 1e-3)) <= 1e-6);
            CHECK(max_abs_diff(guided_filter(p, p, r, 1e-2), oracle::guided_filter(p, p, r, 1e-2)) <= 1e-6);
        }
    }
}

TEST_CASE("guided filter of a constant is that constant") {
    const ImageF c(20, 14, 0.42);
    const auto q = guided_filter(c, c, 4, 1e-3);
    for (double v : q.pixels()) REQUIRE(std::abs(v - 0.42) <= 1e-9);
}

TEST_CASE("guided filter with huge epsilon approaches the double box mean") {
    const auto p = fixture::random_image(24, 24, 41);
    const auto guide = fixture::random_image(24, 24, 42);
    CHECK(max_abs_diff(guided_filter(p, guide, 3, 1e6), box_mean(box_mean(p, 3), 3)) <= 1e-3);
}

TEST_CASE("self-guided output stays inside the input range") {
    const auto p = fixture::random_image(32, 32, 43, 0.2, 0.9);
    const auto q = guided_filter(p, p, 4, 1e-3);
    for (double v : q.pixels()) REQUIRE((v >= 0.2 - 1e-6 && v <= 0.9 + 1e-6));
}

TEST_CASE("guided filter preserves frame metadata") {
    Frame f = frame_of(fixture::random_image(10, 10, 44), 6);
    f.timestamp_s = 0.6;
    const Frame q = guided_filter(f, f, 2, 1e-3);
    CHECK(q.index == 6);
    CHECK(q.timestamp_s == 0.6);
}

TEST_CASE("preprocess config validation") {
    PreprocessConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.gf_radius = 0;
    CHECK_THROWS_AS(cfg.validate(), InputError);
    cfg = {};
    cfg.gf_eps = 0.0;
    CHECK_THROWS_AS(cfg.validate(), InputError);
    cfg = {};
    cfg.hole_thresh = 1.5;
    CHECK_THROWS_AS(cfg.validate(), InputError);
}

}
