#pragma once

#include <vector>

#include "sonarflow/image.hpp"

namespace sonarflow {

// All windowed filters truncate at the image border and normalize by the
// number (or weight) of in-image samples; nothing is padded or reflected.

/// Mean over the (2*radius+1)^2 window centered on each pixel.
ImageF box_mean(const ImageF& image, int radius);

/// Normalized Gaussian kernel with the given radius (length 2*radius+1).
std::vector<double> gaussian_kernel(double sigma, int radius);

/// Separable Gaussian smoothing; kernel radius = ceil(3*sigma) unless given.
ImageF gaussian_blur(const ImageF& image, double sigma, int radius = -1);

/// Separable correlation with a 1D kernel along x then y, truncated-window
/// renormalized by the in-image kernel weight.
ImageF separable_smooth(const ImageF& image, const std::vector<double>& kernel);

/// Bilinear sample at a continuous position; coordinates are clamped to the raster.
double sample_bilinear(const ImageF& image, double x, double y);

/// Bilinear resize to the given size (pixel-center aligned).
ImageF resize_bilinear(const ImageF& image, int width, int height);

// 3x3 binary morphology; out-of-image neighbors are ignored.
Mask dilate3(const Mask& mask);
Mask erode3(const Mask& mask);

}  // namespace sonarflow
