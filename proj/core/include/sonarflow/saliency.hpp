#pragma once

#include <vector>

#include "sonarflow/image.hpp"
#include "sonarflow/sonar_io.hpp"

namespace sonarflow {

/// Per-pixel saliency normalized so the maximum is 1 (or identically 0).
using SaliencyMap = ImageF;
using RoiMask = Mask;

struct PixelCoord {
    int x;
    int y;
};

struct BoundingBox {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;
};

struct Blob {
    int label = 0;
    std::vector<PixelCoord> pixels;
    int area = 0;
    double cx = 0.0;  ///< intensity-weighted centroid
    double cy = 0.0;
    BoundingBox bbox;
    double mean_intensity = 0.0;
};

struct SaliencyConfig {
    double roi_quantile = 0.985;
    int min_blob_area = 30;
    /// Blobs whose mean (background-subtracted) intensity falls below this
    /// are treated as speckle and dropped.
    double min_mean_intensity = 0.1;

    void validate() const;
};

struct RoiResult {
    RoiMask roi;
    std::vector<Blob> blobs;
};

/// Spectral-residual saliency at native resolution: log-amplitude spectrum
/// minus its 3x3 local mean, recombined with the phase, inverted, squared,
/// smoothed (sigma 2.5 px) and max-normalized. Flat images give an all-zero
/// map. Requires at least 8x8 pixels.
SaliencyMap spectral_residual(const ImageF& image);
inline SaliencyMap spectral_residual(const Frame& frame) {
    return spectral_residual(frame.intensities);
}

/// Quantile threshold inside the fan, one 3x3 close + open pass, then
/// 8-connected blobs of at least min_blob_area, sorted by area descending
/// with ties broken by (cy, cx) ascending. Centroids and mean intensity are
/// taken from `intensity`.
RoiResult roi_from_saliency(const SaliencyMap& sal, const Mask& fan, const ImageF& intensity,
                            const SaliencyConfig& cfg);

/// 8-connected components of `mask` with at least min_area pixels, with the
/// same ordering and statistics as roi_from_saliency.
std::vector<Blob> extract_blobs(const Mask& mask, const ImageF& intensity, int min_area);

/// Linear-interpolated quantile (q in [0, 1]) of the values where mask is set.
double masked_quantile(const ImageF& values, const Mask& mask, double q);

}  // namespace sonarflow
