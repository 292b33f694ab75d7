#include "sonarflow/tracking.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

#include "sonarflow/error.hpp"
#include "sonarflow/log.hpp"
#include "sonarflow/parallel.hpp"

namespace sonarflow {

namespace {
constexpr double kMinValidFraction = 0.25;
constexpr int kDefaultBackgroundFrames = 30;
constexpr int kHoleSupportPad = 2;

double median_of(std::vector<double>& v) {
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double upper = v[mid];
    if (v.size() % 2 == 1) return upper;
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}
}  // namespace

std::string_view to_string(TrackStatus s) {
    switch (s) {
        case TrackStatus::active: return "active";
        case TrackStatus::lost: return "lost";
        case TrackStatus::finished: return "finished";
    }
    return "unknown";
}

void TrackerConfig::validate() const {
    if (!(max_assoc_dist > 0.0)) throw InputError("--max-assoc-dist must be > 0");
    if (max_gap < 1) throw InputError("--max-gap must be >= 1");
    if (speed_window < 1) throw InputError("--speed-window must be >= 1");
    if (!(crosstalk_axis_ratio > 0.0)) throw InputError("--crosstalk-axis-ratio must be > 0");
    if (!(crosstalk_intensity_ratio > 0.0))
        throw InputError("--crosstalk-intensity-ratio must be > 0");
    if (min_track_points < 1) throw InputError("--min-track-points must be >= 1");
}

void PipelineConfig::validate() const {
    preprocess.validate();
    saliency.validate();
    flow.validate();
    tracker.validate();
    if (stride < 1) throw InputError("--stride must be >= 1");
}

double speed_from_displacement(double u, double v, const ImageCalibration& cal) {
    return std::hypot(u, v) * cal.meters_per_pixel * cal.fps;
}

BlobMotion blob_motion(const FlowField& flow, const Blob& blob) {
    if (blob.pixels.empty()) throw InputError("blob_motion: empty blob");
    std::vector<double> us, vs;
    us.reserve(blob.pixels.size());
    vs.reserve(blob.pixels.size());
    for (const PixelCoord p : blob.pixels) {
        if (!flow.valid.contains(p.x, p.y) || !flow.valid(p.x, p.y)) continue;
        us.push_back(flow.u(p.x, p.y));
        vs.push_back(flow.v(p.x, p.y));
    }
    if (static_cast<double>(us.size()) < kMinValidFraction * static_cast<double>(blob.pixels.size()) ||
        us.empty())
        return {};
    return {median_of(us), median_of(vs), true};
}

namespace {

struct PolarExtent {
    double range_px;
    double azimuth_extent_px;
    double range_extent_px;
    double mean_intensity;
};

PolarExtent polar_extent(const Blob& b, const Frame& frame) {
    const Apex apex = apex_of(frame.width(), frame.height());
    auto range_of = [&](double x, double y) { return std::hypot(x - apex.x, apex.y - y); };
    auto azimuth_of = [&](double x, double y) { return std::atan2(x - apex.x, apex.y - y); };
    const double r0 = range_of(b.cx, b.cy);
    double rmin = 1e300, rmax = -1e300, amin = 1e300, amax = -1e300, sum = 0.0;
    for (const PixelCoord p : b.pixels) {
        const double r = range_of(p.x, p.y);
        const double a = azimuth_of(p.x, p.y);
        rmin = std::min(rmin, r);
        rmax = std::max(rmax, r);
        amin = std::min(amin, a);
        amax = std::max(amax, a);
        sum += frame.intensities(p.x, p.y);
    }
    // +1 px so a single pixel has unit extent in both directions.
    return {r0, (amax - amin) * r0 + 1.0, rmax - rmin + 1.0,
            b.pixels.empty() ? 0.0 : sum / static_cast<double>(b.pixels.size())};
}

}  // namespace

std::vector<Blob> reject_crosstalk(const std::vector<Blob>& blobs, const Frame& frame,
                                   const TrackerConfig& cfg) {
    if (blobs.size() < 2) return blobs;
    std::vector<PolarExtent> ext;
    ext.reserve(blobs.size());
    for (const Blob& b : blobs) ext.push_back(polar_extent(b, frame));
    std::vector<Blob> kept;
    for (std::size_t i = 0; i < blobs.size(); ++i) {
        const PolarExtent& cand = ext[i];
        const bool elongated = cand.azimuth_extent_px >= cfg.crosstalk_axis_ratio * cand.range_extent_px;
        bool lobe = false;
        for (std::size_t j = 0; elongated && j < blobs.size() && !lobe; ++j) {
            if (j == i) continue;
            const PolarExtent& strong = ext[j];
            const bool brighter =
                strong.mean_intensity > cand.mean_intensity &&
                strong.mean_intensity >= cand.mean_intensity / cfg.crosstalk_intensity_ratio;
            const bool same_band =
                std::abs(cand.range_px - strong.range_px) <= static_cast<double>(blobs[j].bbox.h);
            lobe = brighter && same_band;
        }
        if (!lobe) kept.push_back(blobs[i]);
    }
    return kept;
}

void associate(std::vector<Track>& tracks, const std::vector<Detection>& detections,
               int frame_index, const TrackerConfig& cfg, const ImageCalibration& cal) {
    int next_id = 0;
    for (const Track& t : tracks) next_id = std::max(next_id, t.target_id + 1);

    // (distance, target_id, detection index, track index)
    std::vector<std::tuple<double, int, std::size_t, std::size_t>> pairs;
    for (std::size_t ti = 0; ti < tracks.size(); ++ti) {
        const Track& t = tracks[ti];
        if (t.status != TrackStatus::active || t.points.empty()) continue;
        const TrackPoint& last = t.points.back();
        const double steps = frame_index - last.frame_index;
        const double px = last.cx + last.u * steps;
        const double py = last.cy + last.v * steps;
        for (std::size_t di = 0; di < detections.size(); ++di) {
            const double d = std::hypot(detections[di].blob.cx - px, detections[di].blob.cy - py);
            if (d <= cfg.max_assoc_dist) pairs.emplace_back(d, t.target_id, di, ti);
        }
    }
    std::sort(pairs.begin(), pairs.end());

    auto make_point = [&](const Detection& det) {
        TrackPoint p;
        p.frame_index = frame_index;
        p.cx = det.blob.cx;
        p.cy = det.blob.cy;
        p.u = det.motion.u;
        p.v = det.motion.v;
        p.reliable = det.motion.reliable;
        p.range_m = det.range_m;
        p.speed_mps = speed_from_displacement(p.u, p.v, cal);
        return p;
    };

    std::vector<bool> track_used(tracks.size(), false);
    std::vector<bool> det_used(detections.size(), false);
    for (const auto& [d, id, di, ti] : pairs) {
        if (track_used[ti] || det_used[di]) continue;
        track_used[ti] = det_used[di] = true;
        tracks[ti].points.push_back(make_point(detections[di]));
    }
    for (std::size_t ti = 0; ti < tracks.size(); ++ti) {
        Track& t = tracks[ti];
        if (track_used[ti] || t.status != TrackStatus::active || t.points.empty()) continue;
        if (frame_index - t.points.back().frame_index > cfg.max_gap) t.status = TrackStatus::lost;
    }
    for (std::size_t di = 0; di < detections.size(); ++di) {
        if (det_used[di]) continue;
        Track t;
        t.target_id = next_id++;
        t.points.push_back(make_point(detections[di]));
        tracks.push_back(std::move(t));
    }
}

double smoothed_speed(const Track& track, const ImageCalibration& cal, int window) {
    if (track.points.empty()) throw InputError("smoothed_speed: empty track");
    if (window < 1) throw InputError("smoothed_speed: window must be >= 1");
    double sum = 0.0;
    int n = 0;
    for (auto it = track.points.rbegin(); it != track.points.rend() && n < window; ++it) {
        if (!it->reliable) continue;
        sum += speed_from_displacement(it->u, it->v, cal);
        ++n;
    }
    return n == 0 ? 0.0 : sum / n;
}

std::vector<FrameStage> condition_sequence(const Sequence& seq, const PipelineConfig& cfg) {
    cfg.validate();
    if (seq.frames.empty()) throw InputError("pipeline: empty sequence");
    seq.validate();
    const int w = seq.width();
    const int h = seq.height();
    const Mask fan = fan_mask(w, h, seq.calibration);
    const int n_bg = cfg.preprocess.bg_frames > 0
                         ? std::min<int>(cfg.preprocess.bg_frames, static_cast<int>(seq.size()))
                         : std::min<int>(kDefaultBackgroundFrames, static_cast<int>(seq.size()));
    const BackgroundModel bg = build_background(seq, n_bg);

    std::vector<FrameStage> stages(seq.size());
    parallel_for(seq.size(), cfg.threads, [&](std::size_t i) {
        FrameStage& st = stages[i];
        st.subtracted = subtract_background(seq.frames[i], bg);
        for (std::size_t k = 0; k < fan.size(); ++k)
            if (!fan[k]) st.subtracted.intensities[k] = 0.0;
        st.saliency = spectral_residual(st.subtracted.intensities);
        RoiResult roi = roi_from_saliency(st.saliency, fan, st.subtracted.intensities, cfg.saliency);
        st.roi = std::move(roi.roi);
        st.blobs = std::move(roi.blobs);

        // Voids are searched inside each blob's padded bounding box, so dark
        // gaps enclosed by the target count even where saliency missed them.
        Mask support(w, h, 0);
        for (const Blob& b : st.blobs) {
            for (int y = std::max(0, b.bbox.y - kHoleSupportPad);
                 y < std::min(h, b.bbox.y + b.bbox.h + kHoleSupportPad); ++y)
                for (int x = std::max(0, b.bbox.x - kHoleSupportPad);
                     x < std::min(w, b.bbox.x + b.bbox.w + kHoleSupportPad); ++x)
                    support(x, y) = fan(x, y);
        }
        st.holes = detect_holes(st.subtracted, support, cfg.preprocess.hole_thresh);
        Frame filled = st.subtracted;
        if (cfg.preprocess.inpaint)
            filled = inpaint(st.subtracted, st.holes, *cfg.preprocess.inpaint,
                             cfg.preprocess.inpaint_radius);
        st.conditioned =
            guided_filter(filled, filled, cfg.preprocess.gf_radius, cfg.preprocess.gf_eps);
    });
    return stages;
}

std::vector<Track> run_pipeline(const Sequence& seq, const PipelineConfig& cfg) {
    cfg.validate();
    if (seq.size() < static_cast<std::size_t>(cfg.stride) + 1)
        throw InputError("pipeline: sequence needs at least stride + 1 frames");
    const std::vector<FrameStage> stages = condition_sequence(seq, cfg);

    const std::size_t n_pairs = seq.size() - static_cast<std::size_t>(cfg.stride);
    std::vector<std::vector<Detection>> detections(n_pairs);
    parallel_for(n_pairs, cfg.threads, [&](std::size_t i) {
        const FrameStage& st = stages[i];
        std::vector<Blob> blobs = st.blobs;
        if (cfg.tracker.crosstalk_rejection) blobs = reject_crosstalk(blobs, st.subtracted, cfg.tracker);
        if (blobs.empty()) return;
        const FlowField flow = farneback(st.conditioned.intensities,
                                         stages[i + static_cast<std::size_t>(cfg.stride)].conditioned.intensities,
                                         cfg.flow)
                                   .scaled(1.0 / cfg.stride);
        for (Blob& b : blobs) {
            Detection det;
            det.motion = blob_motion(flow, b);
            det.range_m = pixel_to_polar(b.cx, b.cy, seq.width(), seq.height(), seq.calibration).range_m;
            det.blob = std::move(b);
            detections[i].push_back(std::move(det));
        }
    });

    std::vector<Track> tracks;
    for (std::size_t i = 0; i < n_pairs; ++i)
        associate(tracks, detections[i], seq.frames[i].index, cfg.tracker, seq.calibration);

    std::vector<Track> out;
    for (Track& t : tracks) {
        if (static_cast<int>(t.points.size()) < cfg.tracker.min_track_points) continue;
        if (t.status == TrackStatus::active) t.status = TrackStatus::finished;
        out.push_back(std::move(t));
    }
    std::sort(out.begin(), out.end(),
              [](const Track& a, const Track& b) { return a.target_id < b.target_id; });
    log_info("pipeline: " + std::to_string(out.size()) + " tracks from " +
             std::to_string(n_pairs) + " frame pairs");
    return out;
}

std::vector<TrackRecord> to_records(const std::vector<Track>& tracks) {
    std::vector<TrackRecord> out;
    for (const Track& t : tracks) {
        for (const TrackPoint& p : t.points)
            out.push_back({p.frame_index, t.target_id, p.cx, p.cy, p.u, p.v, p.speed_mps});
    }
    std::sort(out.begin(), out.end(), [](const TrackRecord& a, const TrackRecord& b) {
        return std::pair(a.target_id, a.frame_index) < std::pair(b.target_id, b.frame_index);
    });
    return out;
}

std::vector<Track> tracks_from_records(const std::vector<TrackRecord>& records,
                                       const ImageCalibration& cal, int width, int height) {
    std::map<int, Track> by_id;
    for (const TrackRecord& r : records) {
        Track& t = by_id[r.target_id];
        t.target_id = r.target_id;
        t.status = TrackStatus::finished;
        TrackPoint p;
        p.frame_index = r.frame_index;
        p.cx = r.cx;
        p.cy = r.cy;
        p.u = r.u;
        p.v = r.v;
        p.speed_mps = r.speed_mps;
        p.reliable = !(r.u == 0.0 && r.v == 0.0);
        p.range_m = pixel_to_polar(r.cx, r.cy, width, height, cal).range_m;
        t.points.push_back(p);
    }
    std::vector<Track> out;
    for (auto& [id, t] : by_id) {
        std::sort(t.points.begin(), t.points.end(),
                  [](const TrackPoint& a, const TrackPoint& b) { return a.frame_index < b.frame_index; });
        out.push_back(std::move(t));
    }
    return out;
}

}  // namespace sonarflow
