#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "sonarflow/error.hpp"
#include "sonarflow/filters.hpp"
#include "sonarflow/flow.hpp"

using namespace sonarflow;

namespace {

constexpr int kSize = 128;
constexpr int kPad = 16;

const ImageF& base_noise() {
    static const ImageF img = fixture::smooth_noise(kSize + 2 * kPad, kSize + 2 * kPad, 2024, 2.0);
    return img;
}

/// Window of the base noise with content displaced by (sx, sy).
ImageF shifted(double sx, double sy) {
    ImageF out(kSize, kSize);
    for (int y = 0; y < kSize; ++y)
        for (int x = 0; x < kSize; ++x) out(x, y) = sample_bilinear(base_noise(), x + kPad - sx, y + kPad - sy);
    return out;
}

struct FlowStats {
    double mean_u = 0, mean_v = 0, mean_epe = 0;
    double valid_fraction = 0;
};

FlowStats interior_stats(const FlowField& f, double tu, double tv, int margin) {
    FlowStats s;
    int n = 0, valid = 0;
    for (int y = margin; y < f.height() - margin; ++y)
        for (int x = margin; x < f.width() - margin; ++x) {
            ++n;
            valid += f.valid(x, y) != 0;
            s.mean_u += f.u(x, y);
            s.mean_v += f.v(x, y);
            s.mean_epe += std::hypot(f.u(x, y) - tu, f.v(x, y) - tv);
        }
    s.mean_u /= n;
    s.mean_v /= n;
    s.mean_epe /= n;
    s.valid_fraction = static_cast<double>(valid) / n;
    return s;
}

double median_magnitude(const FlowField& f) {
    std::vector<double> m;
    for (std::size_t i = 0; i < f.u.size(); ++i) m.push_back(std::hypot(f.u[i], f.v[i]));
    std::nth_element(m.begin(), m.begin() + m.size() / 2, m.end());
    return m[m.size() / 2];
}

}  // namespace

TEST_SUITE("flow") {

TEST_CASE("poly_expand matches the normal-equations oracle") {
    for (unsigned seed : {1u, 2u, 3u}) {
        const auto img = fixture::random_image(32, 32, seed);
        const auto exp = poly_expand(img, 5, 1.1);
        double worst = 0.0;
        for (int y = 2; y < 30; ++y)
            for (int x = 2; x < 30; ++x) {
                const auto o = oracle::quadratic_fit(img, x, y, 5, 1.1);
                worst = std::max({worst, std::abs(exp.c(x, y) - o[0]), std::abs(exp.b1(x, y) - o[1]),
                                  std::abs(exp.b2(x, y) - o[2]), std::abs(exp.a11(x, y) - o[3]),
                                  std::abs(exp.a22(x, y) - o[4]), std::abs(exp.a12(x, y) - 0.5 * o[5])});
            }
        CHECK(worst <= 1e-6);
    }
}

TEST_CASE("poly_expand matches the oracle at the border and for poly_n 7") {
    const auto img = fixture::random_image(20, 20, 9);
    const auto exp = poly_expand(img, 7, 1.5);
    for (auto [x, y] : {std::pair{0, 0}, {19, 0}, {0, 10}, {19, 19}, {3, 17}}) {
        const auto o = oracle::quadratic_fit(img, x, y, 7, 1.5);
        CHECK(exp.c(x, y) == doctest::Approx(o[0]).epsilon(1e-6));
        CHECK(exp.b1(x, y) == doctest::Approx(o[1]).epsilon(1e-6));
        CHECK(exp.a12(x, y) == doctest::Approx(0.5 * o[5]).epsilon(1e-6));
    }
}

TEST_CASE("poly_expand of a constant") {
    const auto exp = poly_expand(ImageF(20, 20, 0.6), 5, 1.1);
    for (int y = 2; y < 18; ++y)
        for (int x = 2; x < 18; ++x) {
            REQUIRE(std::abs(exp.c(x, y) - 0.6) <= 1e-9);
            REQUIRE(std::abs(exp.b1(x, y)) <= 1e-9);
            REQUIRE(std::abs(exp.b2(x, y)) <= 1e-9);
            REQUIRE(std::abs(exp.a11(x, y)) <= 1e-9);
            REQUIRE(std::abs(exp.a12(x, y)) <= 1e-9);
            REQUIRE(std::abs(exp.a22(x, y)) <= 1e-9);
        }
}

TEST_CASE("poly_expand of a ramp and a parabola") {
    ImageF ramp(24, 24), para(24, 24);
    for (int y = 0; y < 24; ++y)
        for (int x = 0; x < 24; ++x) {
            ramp(x, y) = 0.01 * x;
            para(x, y) = 0.001 * x * x;
        }
    const auto er = poly_expand(ramp, 5, 1.1);
    const auto ep = poly_expand(para, 5, 1.1);
    for (int y = 2; y < 22; ++y)
        for (int x = 2; x < 22; ++x) {
            REQUIRE(std::abs(er.b1(x, y) - 0.01) <= 1e-9);
            REQUIRE(std::abs(er.b2(x, y)) <= 1e-9);
            REQUIRE(std::abs(er.a11(x, y)) <= 1e-9);
            REQUIRE(std::abs(ep.a11(x, y) - 0.001) <= 1e-6);
            REQUIRE(std::abs(ep.a11(x, y) - oracle::quadratic_fit(para, x, y, 5, 1.1)[3]) <= 1e-6);
        }
}

TEST_CASE("single level: identical expansions give zero flow") {
    const auto exp = poly_expand(shifted(0, 0), 5, 1.1);
    const FlowField f = flow_single_level(exp, exp, FlowField(kSize, kSize), 15, 3);
    const auto s = interior_stats(f, 0, 0, 8);
    CHECK(s.mean_epe <= 1e-12);
    CHECK(s.valid_fraction == 1.0);
}

TEST_CASE("single level: integer shift of 3 px") {
    const auto e1 = poly_expand(shifted(0, 0), 5, 1.1);
    const auto e2 = poly_expand(shifted(3, 0), 5, 1.1);
    const FlowField f = flow_single_level(e1, e2, FlowField(kSize, kSize), 15, 3);
    const auto s = interior_stats(f, 3, 0, 16);
    CHECK(std::abs(s.mean_u - 3.0) <= 0.3);
    CHECK(std::abs(s.mean_v) <= 0.3);
}

TEST_CASE("single level: flat patch is invalid") {
    ImageF img = shifted(0, 0);
    for (int y = 30; y < 90; ++y)
        for (int x = 30; x < 90; ++x) img(x, y) = 0.5;
    const auto exp = poly_expand(img, 5, 1.1);
    const FlowField f = flow_single_level(exp, exp, FlowField(kSize, kSize), 15, 3);
    CHECK(f.valid(60, 60) == 0);
    CHECK(f.u(60, 60) == 0.0);
    CHECK(f.v(60, 60) == 0.0);
    CHECK(f.valid(10, 10) != 0);
}

TEST_CASE("identical frames give zero flow") {
    const ImageF f1 = shifted(0, 0);
    const FlowField f = farneback(f1, f1, FlowParams{});
    CHECK(median_magnitude(f) < 1e-6);
    CHECK(interior_stats(f, 0, 0, 8).valid_fraction >= 0.99);
}

TEST_CASE("seven pixel shift with three levels") {
    FlowParams p;
    p.levels = 3;
    const auto s = interior_stats(farneback(shifted(0, 0), shifted(7, 0), p), 7, 0, 16);
    CHECK(std::abs(s.mean_u - 7.0) <= 0.5);
    CHECK(std::abs(s.mean_v) <= 0.5);
}

TEST_CASE("integer shifts up to 8 px") {
    const FlowParams p;
    const ImageF f1 = shifted(0, 0);
    for (auto [sx, sy] : {std::pair{1, 0}, {0, 1}, {-2, 3}, {4, -4}, {7, 0}, {8, 0}, {0, -8}, {-6, 5}, {8, 8}}) {
        CAPTURE(sx);
        CAPTURE(sy);
        const auto s = interior_stats(farneback(f1, shifted(sx, sy), p), sx, sy, 20);
        CHECK(s.mean_epe <= 0.5);
    }
}

TEST_CASE("half pixel shift") {
    const auto s = interior_stats(farneback(shifted(0, 0), shifted(0.5, 0), FlowParams{}), 0.5, 0, 16);
    CHECK(std::abs(s.mean_u - 0.5) <= 0.2);
    CHECK(std::abs(s.mean_v) <= 0.2);
    CHECK(s.mean_epe <= 0.2);
}

TEST_CASE("time reversal") {
    const ImageF a = shifted(0, 0), b = shifted(5, -3);
    const FlowField fw = farneback(a, b, FlowParams{});
    const FlowField bw = farneback(b, a, FlowParams{});
    double disc = 0.0;
    int n = 0;
    for (int y = 20; y < kSize - 20; ++y)
        for (int x = 20; x < kSize - 20; ++x) {
            disc += std::hypot(fw.u(x, y) + bw.u(x, y), fw.v(x, y) + bw.v(x, y));
            ++n;
        }
    CHECK(disc / n <= 0.5);
}

TEST_CASE("invalid pixels carry zero vectors") {
    ImageF a = shifted(0, 0), b = shifted(2, 1);
    for (int y = 0; y < 40; ++y)
        for (int x = 0; x < 40; ++x) a(x, y) = b(x, y) = 0.3;
    const FlowField f = farneback(a, b, FlowParams{});
    for (std::size_t i = 0; i < f.u.size(); ++i)
        if (!f.valid[i]) REQUIRE((f.u[i] == 0.0 && f.v[i] == 0.0));
}

TEST_CASE("small images reduce the pyramid instead of failing") {
    FlowParams p;
    p.levels = 6;
    const ImageF a = fixture::crop(shifted(0, 0), 0, 0, 24, 20);
    CHECK_NOTHROW(farneback(a, a, p));
}

TEST_CASE("farneback argument errors") {
    CHECK_THROWS_AS(farneback(ImageF(32, 32), ImageF(32, 30), FlowParams{}), InputError);
    CHECK_THROWS_AS(farneback(ImageF(12, 32), ImageF(12, 32), FlowParams{}), InputError);
    FlowParams p;
    p.win_size = 4;
    CHECK_THROWS_AS(p.validate(), InputError);
    p = {};
    p.pyramid_scale = 1.0;
    CHECK_THROWS_AS(p.validate(), InputError);
    p = {};
    p.poly_n = 2;
    CHECK_THROWS_AS(p.validate(), InputError);
}

TEST_CASE("flow_between with stride") {
    Sequence seq;
    for (int i = 0; i < 5; ++i) {
        Frame f;
        f.intensities = shifted(2.0 * i, 0.0);
        f.index = i;
        seq.frames.push_back(f);
    }
    const FlowField direct = farneback(seq.frames[1].intensities, seq.frames[2].intensities, FlowParams{});
    const FlowField one = flow_between(seq, 1, 1, FlowParams{});
    CHECK(one.u == direct.u);
    CHECK(one.v == direct.v);

    const auto s1 = interior_stats(flow_between(seq, 0, 1, FlowParams{}), 2, 0, 20);
    const auto s2 = interior_stats(flow_between(seq, 0, 2, FlowParams{}).scaled(0.5), 2, 0, 20);
    CHECK(std::abs(s2.mean_u - s1.mean_u) <= 0.1 * std::abs(s1.mean_u));

    CHECK_THROWS_AS(flow_between(seq, 3, 2, FlowParams{}), InputError);
    CHECK_THROWS_AS(flow_between(seq, 0, 0, FlowParams{}), InputError);
    CHECK_THROWS_AS(flow_between(seq, -1, 1, FlowParams{}), InputError);
}

}
