#pragma once

#include <string_view>
#include <vector>

#include "sonarflow/flow.hpp"
#include "sonarflow/geometry.hpp"
#include "sonarflow/preprocess.hpp"
#include "sonarflow/saliency.hpp"
#include "sonarflow/sonar_io.hpp"

namespace sonarflow {

struct TrackPoint {
    int frame_index = 0;
    double cx = 0.0;
    double cy = 0.0;
    double u = 0.0;  ///< px/frame
    double v = 0.0;
    double range_m = 0.0;
    double speed_mps = 0.0;
    /// False when too few flow vectors backed the motion; such points carry
    /// position only and are skipped by smoothed_speed.
    bool reliable = true;
};

enum class TrackStatus { active, lost, finished };
std::string_view to_string(TrackStatus s);

struct Track {
    int target_id = 0;
    std::vector<TrackPoint> points;
    TrackStatus status = TrackStatus::active;
};

struct TrackerConfig {
    double max_assoc_dist = 30.0;
    int max_gap = 3;
    int speed_window = 10;
    bool crosstalk_rejection = true;
    double crosstalk_axis_ratio = 2.0;
    double crosstalk_intensity_ratio = 0.5;
    /// Tracks shorter than this are dropped from the pipeline output.
    int min_track_points = 3;

    void validate() const;
};

struct BlobMotion {
    double u = 0.0;
    double v = 0.0;
    bool reliable = false;
};

/// A blob in one frame together with its flow-derived motion.
struct Detection {
    Blob blob;
    BlobMotion motion;
    double range_m = 0.0;
};

/// Speed law: |(u, v)| px/frame * meters_per_pixel * fps.
double speed_from_displacement(double u, double v, const ImageCalibration& cal);

/// Componentwise median of valid flow vectors under the blob; unreliable
/// (0, 0) when fewer than 25% of its pixels are valid.
BlobMotion blob_motion(const FlowField& flow, const Blob& blob);

/// Drops azimuth-elongated side lobes that sit in the same range band as a
/// clearly brighter blob. Survivors keep their order.
std::vector<Blob> reject_crosstalk(const std::vector<Blob>& blobs, const Frame& frame,
                                   const TrackerConfig& cfg);

/// Greedy nearest-neighbor association against constant-velocity predictions.
/// Unmatched detections open new tracks; tracks unseen for more than max_gap
/// frames become lost.
void associate(std::vector<Track>& tracks, const std::vector<Detection>& detections,
               int frame_index, const TrackerConfig& cfg, const ImageCalibration& cal);

/// Mean speed over the most recent min(window, available) reliable points.
/// Throws InputError for an empty track; 0 when no point is reliable.
double smoothed_speed(const Track& track, const ImageCalibration& cal, int window);

struct PipelineConfig {
    PreprocessConfig preprocess;
    SaliencyConfig saliency;
    FlowParams flow;
    TrackerConfig tracker;
    int stride = 1;
    unsigned threads = 0;

    void validate() const;
};

/// Intermediate products for one frame, kept for rendering and debugging.
struct FrameStage {
    Frame subtracted;
    Frame conditioned;
    SaliencyMap saliency;
    RoiMask roi;
    HoleMask holes;
    std::vector<Blob> blobs;
};

/// Background subtraction, saliency ROI, hole filling and guided filtering
/// for every frame of `seq`.
std::vector<FrameStage> condition_sequence(const Sequence& seq, const PipelineConfig& cfg);

/// Full monitoring pipeline; returns finished tracks ordered by target_id.
std::vector<Track> run_pipeline(const Sequence& seq, const PipelineConfig& cfg);

/// Flattens tracks into CSV records ordered by (target_id, frame).
std::vector<TrackRecord> to_records(const std::vector<Track>& tracks);

/// Rebuilds tracks from records. Zero-displacement rows are read back as
/// unreliable, since the CSV carries no reliability column.
std::vector<Track> tracks_from_records(const std::vector<TrackRecord>& records,
                                       const ImageCalibration& cal, int width, int height);

}  // namespace sonarflow
