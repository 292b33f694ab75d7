#pragma once

#include "sonarflow/image.hpp"
#include "sonarflow/sonar_io.hpp"

namespace sonarflow {

/// Per-pixel quadratic model f(p + s) ~ s^T A s + b^T s + c, with A stored
/// as its three distinct entries.
struct PolyExpansion {
    ImageF a11, a12, a22;
    ImageF b1, b2;
    ImageF c;

    int width() const { return c.width(); }
    int height() const { return c.height(); }
};

/// Dense displacement field; u is rightward, v downward, in pixels.
/// Invalid pixels always carry (0, 0).
struct FlowField {
    ImageF u, v;
    Mask valid;

    FlowField() = default;
    FlowField(int width, int height) : u(width, height), v(width, height), valid(width, height, 1) {}

    int width() const { return u.width(); }
    int height() const { return u.height(); }

    /// Copy with every vector multiplied by `factor`.
    FlowField scaled(double factor) const;
};

struct FlowParams {
    double pyramid_scale = 0.5;
    int levels = 4;
    int win_size = 15;
    int iterations = 3;
    int poly_n = 5;
    double poly_sigma = 1.1;

    void validate() const;
};

/// Weighted least-squares fit of {1, x, y, x^2, y^2, xy} over the poly_n x poly_n
/// neighborhood with Gaussian weights (std poly_sigma), computed through
/// separable correlations. Border pixels use the truncated neighborhood.
PolyExpansion poly_expand(const ImageF& image, int poly_n, double poly_sigma);

/// One pyramid level of the displacement estimate. `prior` seeds the
/// iteration and is resized by the caller to match the expansions.
FlowField flow_single_level(const PolyExpansion& exp1, const PolyExpansion& exp2,
                            const FlowField& prior, int win_size, int iterations);

/// Coarse-to-fine two-frame flow from frame1 to frame2.
FlowField farneback(const ImageF& frame1, const ImageF& frame2, const FlowParams& params);

/// Flow from frame i to frame i + stride of `seq`, unscaled; divide by the
/// stride (FlowField::scaled) for per-frame displacement.
FlowField flow_between(const Sequence& seq, int i, int stride, const FlowParams& params);

}  // namespace sonarflow
