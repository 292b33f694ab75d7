#pragma once

#include <optional>
#include <string_view>

#include "sonarflow/image.hpp"
#include "sonarflow/sonar_io.hpp"

namespace sonarflow {

struct BackgroundModel {
    ImageF background;
    int n_frames_used = 0;
};

/// true = pixel to inpaint.
using HoleMask = Mask;

enum class InpaintMethod { telea, biharmonic };

std::string_view to_string(InpaintMethod m);
/// Accepts "telea" | "biharmonic"; "none" yields nullopt. Throws InputError otherwise.
std::optional<InpaintMethod> parse_inpaint_method(std::string_view name);

struct PreprocessConfig {
    int bg_frames = 0;  ///< 0 = min(30, sequence length)
    double hole_thresh = 0.15;
    std::optional<InpaintMethod> inpaint = InpaintMethod::telea;
    int inpaint_radius = 3;
    int gf_radius = 4;
    double gf_eps = 1e-3;

    void validate() const;
};

/// Per-pixel temporal median over the first n frames.
BackgroundModel build_background(const Sequence& seq, int n);

/// clamp(frame - background, 0, 1); keeps the frame's index and timestamp.
Frame subtract_background(const Frame& frame, const BackgroundModel& bg);

/// Pixels inside `roi` darker than low_thresh, grouped into 4-connected
/// components; components that touch the ROI border (or the image edge) are
/// dropped because they are likely open background rather than voids.
HoleMask detect_holes(const Frame& frame, const Mask& roi, double low_thresh);

/// Fills hole pixels; every other pixel is copied bit-exactly.
///  - telea: fast-marching fill from the hole boundary inward, weighting known
///    neighbors within `radius` by direction, distance and level-set terms.
///  - biharmonic: SOR iterations of the 13-point biharmonic stencil with the
///    surrounding pixels as Dirichlet data, stopped once the largest update
///    in a sweep drops below 1e-6.
/// Throws InputError when the mask leaves no known pixel.
Frame inpaint(const Frame& frame, const HoleMask& holes, InpaintMethod method, int radius = 3);

/// Guided filter q = mean(a) * I + mean(b) over (2r+1)^2 truncated windows.
Frame guided_filter(const Frame& input, const Frame& guide, int radius, double epsilon);
ImageF guided_filter(const ImageF& input, const ImageF& guide, int radius, double epsilon);

}  // namespace sonarflow
