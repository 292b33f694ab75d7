#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sonarflow/geometry.hpp"
#include "sonarflow/sonar_io.hpp"

namespace sonarflow {

enum class ShapeKind { ellipse, capsule, deformable_bag };
enum class PathKind { linear, sinusoid };

struct SynthShape {
    ShapeKind kind = ShapeKind::capsule;
    // ellipse: full width/height in px
    double w = 20.0;
    double h = 20.0;
    // capsule: total length and diameter in px
    double len = 48.0;
    double width = 16.0;
    // deformable bag: ellipse whose semi-axes breathe in antiphase,
    // a = r (1 + amp sin(2 pi f t)), b = r (1 - amp sin(2 pi f t))
    double base_radius = 14.0;
    double deform_amp = 0.3;
    double deform_freq = 0.08;  ///< cycles per frame
    double orientation_deg = 0.0;  ///< long axis angle from +x
};

struct SynthPath {
    PathKind kind = PathKind::linear;
    double start_x = 0.0;  ///< px
    double start_y = 0.0;
    double velocity_x_mps = 0.0;  ///< raster axes: +x right, +y down
    double velocity_y_mps = 0.0;
    // sinusoid: lateral oscillation perpendicular to the velocity
    double amp_px = 0.0;
    double period_frames = 20.0;
    double phase = 0.0;
};

struct SynthTarget {
    int id = 0;
    SynthShape shape;
    double intensity = 0.75;
    /// Relative amplitude of the rigid surface texture that moves with the target.
    double texture_amp = 0.25;
    SynthPath path;
};

struct SeabedBand {
    double range_min_m = 0.0;
    double range_max_m = 0.0;
    double intensity = 0.0;
};

struct CrosstalkModel {
    bool enabled = false;
    double lobe_gain = 0.4;
    double lobe_azimuth_offset_px = 48.0;
    double lobe_aspect = 5.0;
    double lobe_range_extent_px = 6.0;
};

struct SynthScene {
    std::string name = "custom";
    ImageCalibration calibration;
    int width = 256;
    int height = 256;
    int duration_frames = 20;
    double speckle_mean = 0.08;
    double speckle_std = 0.04;
    std::optional<SeabedBand> seabed;
    std::vector<SynthTarget> targets;
    CrosstalkModel crosstalk;
    double dropout_prob = 0.0;
    std::uint64_t rng_seed = 1;

    /// Checks ranges and that every target (and lobe) stays inside the fan
    /// and the raster for all frames. Throws InputError.
    void validate() const;
};

struct RenderedScene {
    Sequence sequence;
    std::vector<GtBox> gt;
};

struct GeneratedPaths {
    std::filesystem::path manifest;
    std::filesystem::path gt;
};

/// Center of a target at a frame, px.
struct Point2 {
    double x;
    double y;
};
Point2 target_center(const SynthTarget& t, const ImageCalibration& cal, int frame);

/// Ground-truth boxes for every target and lobe at every frame.
std::vector<GtBox> scene_ground_truth(const SynthScene& scene);

/// Renders frames in memory. Output is identical for any thread count.
RenderedScene render_scene(const SynthScene& scene, unsigned threads = 1);

/// Renders and writes frames (8-bit PGM), manifest.json, gt.json and scene.json.
GeneratedPaths generate(const SynthScene& scene, const std::filesystem::path& out_dir,
                        unsigned threads = 1);

/// Named presets: horizontal-bottle, horizontal-bag, vertical-bottle,
/// vertical-bag, multi-0.59, crosstalk-demo.
std::map<std::string, SynthScene> default_scenes();
std::vector<std::string> preset_names();
/// Throws InputError listing valid names when unknown.
SynthScene preset(const std::string& name);

/// JSON scene files mirror SynthScene field names.
std::string scene_to_json(const SynthScene& scene);
SynthScene scene_from_json(const std::string& text);
SynthScene load_scene(const std::filesystem::path& path);

}  // namespace sonarflow
