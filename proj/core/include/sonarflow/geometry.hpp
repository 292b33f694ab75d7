#pragma once

#include "sonarflow/image.hpp"

namespace sonarflow {

inline constexpr double kPi = 3.14159265358979323846;

inline constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

/// Sonar-frame spherical coordinates: range (m), azimuth and elevation (rad).
struct PolarPoint {
    double r = 0.0;
    double theta = 0.0;
    double phi = 0.0;
};

struct EuclideanPoint {
    double ex = 0.0;
    double ey = 0.0;
    double ez = 0.0;
};

/// Raster calibration shared by every stage. Angles are stored in degrees
/// here because this struct mirrors the manifest; convert at use sites.
struct ImageCalibration {
    double meters_per_pixel = 0.0029;
    double fps = 10.0;
    double fov_azimuth_deg = 28.8;
    double fov_elevation_deg = 14.0;
    double range_min_m = 0.0;
    double range_max_m = 1.0;

    /// Throws InputError when any field breaks its invariant.
    void validate() const;

    double range_max_px() const { return range_max_m / meters_per_pixel; }
    double range_min_px() const { return range_min_m / meters_per_pixel; }
};

/// Throws InputError when p.r < 0.
EuclideanPoint polar_to_euclidean(const PolarPoint& p);

/// Total inverse; the origin maps to r = theta = phi = 0.
PolarPoint euclidean_to_polar(const EuclideanPoint& e);

/// Position of the sonar apex in pixel coordinates: bottom-center of the
/// raster, with range increasing upward.
struct Apex {
    double x;
    double y;
};
Apex apex_of(int width, int height);

/// Range (m) and azimuth (rad, positive to the right of the boresight) of a
/// pixel center.
struct PixelPolar {
    double range_m;
    double azimuth_rad;
};
PixelPolar pixel_to_polar(double x, double y, int width, int height, const ImageCalibration& cal);

/// Binary field-of-view mask: set where the pixel's (range, azimuth) falls
/// inside [range_min, range_max] x [-fov/2, +fov/2].
Mask fan_mask(int width, int height, const ImageCalibration& cal);

}  // namespace sonarflow
