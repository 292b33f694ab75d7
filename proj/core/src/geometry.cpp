#include "sonarflow/geometry.hpp"

#include <cmath>

#include "sonarflow/error.hpp"

namespace sonarflow {

void ImageCalibration::validate() const {
    if (!(meters_per_pixel > 0.0) || !std::isfinite(meters_per_pixel))
        throw InputError("calibration: meters_per_pixel must be > 0");
    if (!(fps > 0.0) || !std::isfinite(fps)) throw InputError("calibration: fps must be > 0");
    if (!(fov_azimuth_deg > 0.0) || fov_azimuth_deg > 360.0)
        throw InputError("calibration: fov_azimuth_deg must be in (0, 360]");
    if (!(range_min_m >= 0.0) || !(range_min_m < range_max_m))
        throw InputError("calibration: require 0 <= range_min_m < range_max_m");
}

EuclideanPoint polar_to_euclidean(const PolarPoint& p) {
    if (!(p.r >= 0.0)) throw InputError("polar_to_euclidean: range must be non-negative");
    const double cp = std::cos(p.phi);
    return {p.r * cp * std::cos(p.theta), p.r * cp * std::sin(p.theta), p.r * std::sin(p.phi)};
}

PolarPoint euclidean_to_polar(const EuclideanPoint& e) {
    const double r = std::sqrt(e.ex * e.ex + e.ey * e.ey + e.ez * e.ez);
    if (r == 0.0) return {};
    const double horizontal = std::hypot(e.ex, e.ey);
    return {r, std::atan2(e.ey, e.ex), std::atan2(e.ez, horizontal)};
}

Apex apex_of(int width, int height) {
    return {(width - 1) * 0.5, static_cast<double>(height - 1)};
}

PixelPolar pixel_to_polar(double x, double y, int width, int height,
                          const ImageCalibration& cal) {
    const Apex apex = apex_of(width, height);
    const double dx = x - apex.x;
    const double dy = apex.y - y;
    return {std::hypot(dx, dy) * cal.meters_per_pixel, std::atan2(dx, dy)};
}

Mask fan_mask(int width, int height, const ImageCalibration& cal) {
    if (width <= 0 || height <= 0) throw InputError("fan_mask: zero-sized image");
    cal.validate();
    Mask mask(width, height, 0);
    const double half_fov = deg_to_rad(cal.fov_azimuth_deg) * 0.5;
    // Small slack so pixels exactly on the boundary are kept despite rounding.
    constexpr double kSlack = 1e-12;
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const PixelPolar pp = pixel_to_polar(x, y, width, height, cal);
            const bool in_range = pp.range_m >= cal.range_min_m - kSlack &&
                                  pp.range_m <= cal.range_max_m + kSlack;
            const bool in_azimuth = std::abs(pp.azimuth_rad) <= half_fov + kSlack;
            mask(x, y) = (in_range && in_azimuth) ? 1 : 0;
        }
    }
    return mask;
}

}  // namespace sonarflow
