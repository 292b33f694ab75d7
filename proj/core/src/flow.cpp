#include "sonarflow/flow.hpp"

#include <array>
#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "sonarflow/error.hpp"
#include "sonarflow/filters.hpp"
#include "sonarflow/log.hpp"

namespace sonarflow {

namespace {

constexpr double kDetThreshold = 1e-12;
constexpr int kMinLevelSize = 8;

using Mat6 = std::array<std::array<double, 6>, 6>;

// Monomial exponents (x power, y power) for the basis {1, x, y, x^2, y^2, xy}.
constexpr std::array<std::pair<int, int>, 6> kBasis{
    {{0, 0}, {1, 0}, {0, 1}, {2, 0}, {0, 2}, {1, 1}}};

// Inverts a symmetric positive definite 6x6 matrix by Gauss-Jordan with
// partial pivoting. Returns false when singular.
bool invert6(Mat6 m, Mat6& inv) {
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) inv[i][j] = (i == j) ? 1.0 : 0.0;
    for (int col = 0; col < 6; ++col) {
        int pivot = col;
        for (int r = col + 1; r < 6; ++r)
            if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
        if (std::abs(m[pivot][col]) < 1e-14) return false;
        std::swap(m[pivot], m[col]);
        std::swap(inv[pivot], inv[col]);
        const double d = m[col][col];
        for (int j = 0; j < 6; ++j) {
            m[col][j] /= d;
            inv[col][j] /= d;
        }
        for (int r = 0; r < 6; ++r) {
            if (r == col) continue;
            const double f = m[r][col];
            if (f == 0.0) continue;
            for (int j = 0; j < 6; ++j) {
                m[r][j] -= f * m[col][j];
                inv[r][j] -= f * inv[col][j];
            }
        }
    }
    return true;
}

// Weighted power sums sum_{d in [-lo, hi]} g(d) d^p for p = 0..4.
using PowerSums = std::array<double, 5>;

PowerSums power_sums(const std::vector<double>& g, int radius, int lo, int hi) {
    PowerSums s{};
    for (int d = -lo; d <= hi; ++d) {
        double term = g[static_cast<std::size_t>(d + radius)];
        for (int p = 0; p < 5; ++p) {
            s[static_cast<std::size_t>(p)] += term;
            term *= d;
        }
    }
    return s;
}

}  // namespace

FlowField FlowField::scaled(double factor) const {
    FlowField out = *this;
    for (std::size_t i = 0; i < u.size(); ++i) {
        out.u[i] *= factor;
        out.v[i] *= factor;
    }
    return out;
}

void FlowParams::validate() const {
    if (!(pyramid_scale > 0.0 && pyramid_scale < 1.0))
        throw InputError("flow: pyramid_scale must lie strictly between 0 and 1");
    if (levels < 1) throw InputError("--fb-levels must be >= 1");
    if (win_size < 3 || win_size % 2 == 0) throw InputError("--fb-win must be odd and >= 3");
    if (iterations < 1) throw InputError("--fb-iters must be >= 1");
    if (poly_n < 3 || poly_n % 2 == 0) throw InputError("--fb-poly-n must be odd and >= 3");
    if (!(poly_sigma > 0.0)) throw InputError("--fb-poly-sigma must be > 0");
}

PolyExpansion poly_expand(const ImageF& image, int poly_n, double poly_sigma) {
    if (poly_n < 3 || poly_n % 2 == 0) throw InputError("poly_expand: poly_n must be odd and >= 3");
    if (!(poly_sigma > 0.0)) throw InputError("poly_expand: poly_sigma must be > 0");
    const int w = image.width();
    const int h = image.height();
    const int radius = poly_n / 2;
    std::vector<double> g(static_cast<std::size_t>(2 * radius + 1));
    for (int d = -radius; d <= radius; ++d)
        g[static_cast<std::size_t>(d + radius)] = std::exp(-0.5 * d * d / (poly_sigma * poly_sigma));

    // Horizontal pass: weighted sums of f, d*f, d^2*f along each row.
    ImageF s0(w, h), s1(w, h), s2(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double a0 = 0.0, a1 = 0.0, a2 = 0.0;
            for (int d = -radius; d <= radius; ++d) {
                const int xx = x + d;
                if (xx < 0 || xx >= w) continue;
                const double gf = g[static_cast<std::size_t>(d + radius)] * image(xx, y);
                a0 += gf;
                a1 += gf * d;
                a2 += gf * d * d;
            }
            s0(x, y) = a0;
            s1(x, y) = a1;
            s2(x, y) = a2;
        }
    }

    // Gram-matrix inverses depend only on how the window is truncated.
    auto class_of = [radius](int pos, int size) {
        return std::pair(std::min(radius, pos), std::min(radius, size - 1 - pos));
    };
    std::map<std::pair<int, int>, PowerSums> xsums, ysums;
    for (int x = 0; x < w; ++x) {
        const auto c = class_of(x, w);
        if (!xsums.count(c)) xsums[c] = power_sums(g, radius, c.first, c.second);
    }
    for (int y = 0; y < h; ++y) {
        const auto c = class_of(y, h);
        if (!ysums.count(c)) ysums[c] = power_sums(g, radius, c.first, c.second);
    }
    std::map<std::array<int, 4>, std::pair<bool, Mat6>> inverses;
    auto inverse_for = [&](int x, int y) -> const std::pair<bool, Mat6>& {
        const auto cx = class_of(x, w);
        const auto cy = class_of(y, h);
        const std::array<int, 4> key{cx.first, cx.second, cy.first, cy.second};
        auto it = inverses.find(key);
        if (it != inverses.end()) return it->second;
        const PowerSums& sx = xsums.at(cx);
        const PowerSums& sy = ysums.at(cy);
        Mat6 gram{};
        for (int k = 0; k < 6; ++k)
            for (int l = 0; l < 6; ++l)
                gram[k][l] = sx[static_cast<std::size_t>(kBasis[k].first + kBasis[l].first)] *
                             sy[static_cast<std::size_t>(kBasis[k].second + kBasis[l].second)];
        std::pair<bool, Mat6> entry;
        entry.first = invert6(gram, entry.second);
        return inverses.emplace(key, entry).first->second;
    };

    PolyExpansion out{ImageF(w, h), ImageF(w, h), ImageF(w, h),
                      ImageF(w, h), ImageF(w, h), ImageF(w, h)};
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            std::array<double, 6> m{};
            for (int d = -radius; d <= radius; ++d) {
                const int yy = y + d;
                if (yy < 0 || yy >= h) continue;
                const double gy = g[static_cast<std::size_t>(d + radius)];
                m[0] += gy * s0(x, yy);
                m[1] += gy * s1(x, yy);
                m[2] += gy * d * s0(x, yy);
                m[3] += gy * s2(x, yy);
                m[4] += gy * d * d * s0(x, yy);
                m[5] += gy * d * s1(x, yy);
            }
            const auto& [ok, inv] = inverse_for(x, y);
            std::array<double, 6> coef{};
            if (ok) {
                for (int k = 0; k < 6; ++k)
                    for (int l = 0; l < 6; ++l) coef[k] += inv[k][l] * m[l];
            }
            out.c(x, y) = coef[0];
            out.b1(x, y) = coef[1];
            out.b2(x, y) = coef[2];
            out.a11(x, y) = coef[3];
            out.a22(x, y) = coef[4];
            out.a12(x, y) = 0.5 * coef[5];
        }
    }
    return out;
}

FlowField flow_single_level(const PolyExpansion& exp1, const PolyExpansion& exp2,
                            const FlowField& prior, int win_size, int iterations) {
    const int w = exp1.width();
    const int h = exp1.height();
    if (exp2.width() != w || exp2.height() != h || prior.width() != w || prior.height() != h)
        throw InputError("flow_single_level: dimension mismatch");
    if (win_size < 1 || win_size % 2 == 0) throw InputError("flow_single_level: win_size must be odd");
    if (iterations < 1) throw InputError("flow_single_level: iterations must be >= 1");
    const int half = win_size / 2;

    FlowField flow = prior;
    ImageF g11(w, h), g12(w, h), g22(w, h), h1(w, h), h2(w, h);
    Mask inside(w, h, 1);
    for (int it = 0; it < iterations; ++it) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const double du = std::round(flow.u(x, y));
                const double dv = std::round(flow.v(x, y));
                const int x2 = x + static_cast<int>(du);
                const int y2 = y + static_cast<int>(dv);
                if (x2 < 0 || y2 < 0 || x2 >= w || y2 >= h) {
                    inside(x, y) = 0;
                    g11(x, y) = g12(x, y) = g22(x, y) = h1(x, y) = h2(x, y) = 0.0;
                    continue;
                }
                inside(x, y) = 1;
                const double a11 = 0.5 * (exp1.a11(x, y) + exp2.a11(x2, y2));
                const double a12 = 0.5 * (exp1.a12(x, y) + exp2.a12(x2, y2));
                const double a22 = 0.5 * (exp1.a22(x, y) + exp2.a22(x2, y2));
                // Rounded displacement so the linear term matches the nearest-pixel read.
                const double db1 = -0.5 * (exp2.b1(x2, y2) - exp1.b1(x, y)) + a11 * du + a12 * dv;
                const double db2 = -0.5 * (exp2.b2(x2, y2) - exp1.b2(x, y)) + a12 * du + a22 * dv;
                g11(x, y) = a11 * a11 + a12 * a12;
                g12(x, y) = a12 * (a11 + a22);
                g22(x, y) = a12 * a12 + a22 * a22;
                h1(x, y) = a11 * db1 + a12 * db2;
                h2(x, y) = a12 * db1 + a22 * db2;
            }
        }
        const ImageF m11 = box_mean(g11, half);
        const ImageF m12 = box_mean(g12, half);
        const ImageF m22 = box_mean(g22, half);
        const ImageF n1 = box_mean(h1, half);
        const ImageF n2 = box_mean(h2, half);
        for (std::size_t i = 0; i < m11.size(); ++i) {
            const double det = m11[i] * m22[i] - m12[i] * m12[i];
            if (det < kDetThreshold) {
                flow.valid[i] = 0;
                continue;
            }
            flow.valid[i] = inside[i];
            flow.u[i] = (m22[i] * n1[i] - m12[i] * n2[i]) / det;
            flow.v[i] = (m11[i] * n2[i] - m12[i] * n1[i]) / det;
        }
    }
    for (std::size_t i = 0; i < flow.u.size(); ++i) {
        if (!flow.valid[i]) {
            flow.u[i] = 0.0;
            flow.v[i] = 0.0;
        }
    }
    return flow;
}

namespace {

// Estimates carried to the next finer level: where this level could not
// solve, the prior is kept rather than the zeroed output.
FlowField carry_forward(const FlowField& result, const FlowField& prior) {
    FlowField carried = result;
    for (std::size_t i = 0; i < carried.u.size(); ++i) {
        if (!carried.valid[i]) {
            carried.u[i] = prior.u[i];
            carried.v[i] = prior.v[i];
        }
    }
    return carried;
}

}  // namespace

FlowField farneback(const ImageF& frame1, const ImageF& frame2, const FlowParams& params) {
    params.validate();
    if (!frame1.same_shape(frame2)) throw InputError("farneback: dimension mismatch");
    const int w = frame1.width();
    const int h = frame1.height();
    if (w < 16 || h < 16) throw InputError("farneback: frames must be at least 16x16");

    std::vector<std::pair<int, int>> sizes{{w, h}};
    for (int k = 1; k < params.levels; ++k) {
        const double s = std::pow(params.pyramid_scale, k);
        const int lw = static_cast<int>(std::lround(w * s));
        const int lh = static_cast<int>(std::lround(h * s));
        if (lw < kMinLevelSize || lh < kMinLevelSize) {
            log_warn("farneback: image too small for " + std::to_string(params.levels) +
                     " pyramid levels; using " + std::to_string(k));
            break;
        }
        sizes.emplace_back(lw, lh);
    }
    const int levels = static_cast<int>(sizes.size());

    FlowField raw;
    for (int k = levels - 1; k >= 0; --k) {
        const auto [lw, lh] = sizes[static_cast<std::size_t>(k)];
        ImageF l1 = frame1;
        ImageF l2 = frame2;
        if (k > 0) {
            const double s = std::pow(params.pyramid_scale, k);
            const double sigma = (1.0 / s - 1.0) * 0.5;
            l1 = resize_bilinear(gaussian_blur(frame1, sigma), lw, lh);
            l2 = resize_bilinear(gaussian_blur(frame2, sigma), lw, lh);
        }
        FlowField prior(lw, lh);
        if (k < levels - 1) {
            const double sx = static_cast<double>(lw) / raw.width();
            const double sy = static_cast<double>(lh) / raw.height();
            const ImageF up_u = resize_bilinear(raw.u, lw, lh);
            const ImageF up_v = resize_bilinear(raw.v, lw, lh);
            for (std::size_t i = 0; i < prior.u.size(); ++i) {
                prior.u[i] = up_u[i] * sx;
                prior.v[i] = up_v[i] * sy;
            }
        }
        const PolyExpansion e1 = poly_expand(l1, params.poly_n, params.poly_sigma);
        const PolyExpansion e2 = poly_expand(l2, params.poly_n, params.poly_sigma);
        FlowField result = flow_single_level(e1, e2, prior, params.win_size, params.iterations);
        if (k == 0) return result;
        raw = carry_forward(result, prior);
    }
    return raw;  // unreachable: level 0 always runs
}

FlowField flow_between(const Sequence& seq, int i, int stride, const FlowParams& params) {
    if (stride < 1) throw InputError("flow_between: stride must be >= 1");
    if (i < 0 || static_cast<std::size_t>(i) + static_cast<std::size_t>(stride) >= seq.frames.size())
        throw InputError("flow_between: frame index out of range");
    return farneback(seq.frames[static_cast<std::size_t>(i)].intensities,
                     seq.frames[static_cast<std::size_t>(i + stride)].intensities, params);
}

}  // namespace sonarflow
