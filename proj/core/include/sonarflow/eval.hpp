#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sonarflow/sonar_io.hpp"
#include "sonarflow/tracking.hpp"

namespace sonarflow {

struct MotionVector {
    int frame_index = 0;
    double u = 0.0;
    double v = 0.0;
};

struct EvalConfig {
    /// Smallest matching gate; larger GT boxes use their diagonal.
    double min_gate_px = 20.0;
    int speed_window = 10;
};

struct TargetEval {
    int gt_id = 0;
    /// Track with the most matched frames; -1 when nothing matched.
    int primary_track = -1;
    double gt_speed_mps = 0.0;
    double est_speed_mps = 0.0;
    double speed_abs_err_mps = 0.0;
    /// Absent when the GT speed is zero.
    std::optional<double> speed_rel_err;
    double traj_rmse_px = 0.0;
    int matched_frames = 0;
    int id_switches = 0;
};

struct EvalReport {
    std::vector<TargetEval> targets;  ///< ordered by gt_id
    double mean_speed_abs_err_mps = 0.0;
    double mean_speed_rel_err = 0.0;
    double mean_traj_rmse_px = 0.0;
    int total_id_switches = 0;
    int track_count = 0;
    /// Tracks whose points mostly sit on crosstalk-lobe GT (negative ids).
    /// Such a track may also be assigned to a nearby target.
    int lobe_tracks = 0;
    /// Tracks matched to no GT entry at all.
    int unmatched_tracks = 0;
    /// Set when no track point matched any target.
    bool no_overlap = false;
    EvalConfig config;
    ImageCalibration calibration;
};

/// Consecutive-center differences per target, keyed by id. The first box of
/// each target has no vector; gaps in frame numbering are divided out.
/// Targets with a single box are skipped with a warning.
std::map<int, std::vector<MotionVector>> gt_motion_vectors(const std::vector<GtBox>& gt);

/// Tracks that replay the GT boxes of non-negative ids, for self-checks.
std::vector<Track> tracks_from_gt(const std::vector<GtBox>& gt, const ImageCalibration& cal);

EvalReport compare(const std::vector<Track>& tracks, const std::vector<GtBox>& gt,
                   const ImageCalibration& cal, const EvalConfig& cfg = {});

std::string report_to_json(const EvalReport& report);
void write_report(const EvalReport& report, const std::filesystem::path& path);
/// Aligned plain-text table, one row per target plus a mean row.
std::string report_table(const EvalReport& report);

}  // namespace sonarflow
