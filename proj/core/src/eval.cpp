#include "sonarflow/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "json.hpp"
#include "sonarflow/error.hpp"
#include "sonarflow/log.hpp"

namespace sonarflow {

namespace {

struct Vote {
    int gt_id = 0;
    double dist = 0.0;
    bool hit = false;
};

// Nearest GT center at the point's frame, subject to the gate.
Vote nearest_gt(const TrackPoint& p, const std::vector<const GtBox*>& boxes, double min_gate) {
    Vote best;
    double best_dist = std::numeric_limits<double>::infinity();
    for (const GtBox* b : boxes) {
        const double d = std::hypot(p.cx - b->cx, p.cy - b->cy);
        if (d < best_dist) {
            best_dist = d;
            best.gt_id = b->target_id;
            best.dist = d;
            best.hit = d <= std::max(min_gate, std::hypot(b->w, b->h));
        }
    }
    return best;
}

double mean(const std::vector<double>& xs) {
    if (xs.empty()) return 0.0;
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

}  // namespace

std::map<int, std::vector<MotionVector>> gt_motion_vectors(const std::vector<GtBox>& gt) {
    std::map<int, std::vector<GtBox>> by_id;
    for (const GtBox& b : gt) by_id[b.target_id].push_back(b);
    std::map<int, std::vector<MotionVector>> out;
    for (auto& [id, boxes] : by_id) {
        if (boxes.size() < 2) {
            log_warn("eval: target " + std::to_string(id) + " has a single GT box; skipped");
            continue;
        }
        std::sort(boxes.begin(), boxes.end(),
                  [](const GtBox& a, const GtBox& b) { return a.frame_index < b.frame_index; });
        auto& vecs = out[id];
        for (std::size_t i = 1; i < boxes.size(); ++i) {
            const double gap = boxes[i].frame_index - boxes[i - 1].frame_index;
            vecs.push_back({boxes[i].frame_index, (boxes[i].cx - boxes[i - 1].cx) / gap,
                            (boxes[i].cy - boxes[i - 1].cy) / gap});
        }
    }
    return out;
}

std::vector<Track> tracks_from_gt(const std::vector<GtBox>& gt, const ImageCalibration& cal) {
    std::map<int, std::vector<GtBox>> by_id;
    for (const GtBox& b : gt)
        if (b.target_id >= 0) by_id[b.target_id].push_back(b);
    std::vector<Track> tracks;
    for (auto& [id, boxes] : by_id) {
        std::sort(boxes.begin(), boxes.end(),
                  [](const GtBox& a, const GtBox& b) { return a.frame_index < b.frame_index; });
        Track t;
        t.target_id = id;
        t.status = TrackStatus::finished;
        for (std::size_t i = 0; i < boxes.size(); ++i) {
            TrackPoint p;
            p.frame_index = boxes[i].frame_index;
            p.cx = boxes[i].cx;
            p.cy = boxes[i].cy;
            if (i == 0) {
                p.reliable = false;
            } else {
                const double gap = boxes[i].frame_index - boxes[i - 1].frame_index;
                p.u = (boxes[i].cx - boxes[i - 1].cx) / gap;
                p.v = (boxes[i].cy - boxes[i - 1].cy) / gap;
            }
            p.speed_mps = speed_from_displacement(p.u, p.v, cal);
            t.points.push_back(p);
        }
        tracks.push_back(std::move(t));
    }
    return tracks;
}

EvalReport compare(const std::vector<Track>& tracks, const std::vector<GtBox>& gt,
                   const ImageCalibration& cal, const EvalConfig& cfg) {
    cal.validate();
    if (cfg.speed_window < 1) throw InputError("eval: speed window must be >= 1");
    EvalReport report;
    report.config = cfg;
    report.calibration = cal;
    report.track_count = static_cast<int>(tracks.size());

    std::map<int, std::vector<const GtBox*>> targets_at;
    std::map<int, std::vector<const GtBox*>> lobes_at;
    std::map<int, int> target_ids;
    for (const GtBox& b : gt) {
        if (b.target_id >= 0) {
            targets_at[b.frame_index].push_back(&b);
            target_ids[b.target_id] = 0;
        } else {
            lobes_at[b.frame_index].push_back(&b);
        }
    }
    const auto vectors = gt_motion_vectors(gt);

    // A track belongs to the target (or lobe) that a strict majority of its
    // points fall on. Lobe entries never take part in target matching.
    auto majority = [&](const Track& t, const std::map<int, std::vector<const GtBox*>>& boxes,
                        std::vector<Vote>* keep) {
        std::map<int, int> tally;
        for (const TrackPoint& p : t.points) {
            auto it = boxes.find(p.frame_index);
            const Vote v = it == boxes.end() ? Vote{} : nearest_gt(p, it->second, cfg.min_gate_px);
            if (keep != nullptr) keep->push_back(v);
            if (v.hit) ++tally[v.gt_id];
        }
        int best_id = 0;
        int best_count = 0;
        for (const auto& [id, n] : tally) {
            if (n > best_count) {
                best_count = n;
                best_id = id;
            }
        }
        return 2 * best_count > static_cast<int>(t.points.size()) ? std::optional<int>(best_id)
                                                                  : std::nullopt;
    };

    std::vector<std::optional<int>> assigned(tracks.size());
    std::vector<std::vector<Vote>> votes(tracks.size());
    for (std::size_t ti = 0; ti < tracks.size(); ++ti) {
        assigned[ti] = majority(tracks[ti], targets_at, &votes[ti]);
        if (majority(tracks[ti], lobes_at, nullptr)) ++report.lobe_tracks;
        else if (!assigned[ti]) ++report.unmatched_tracks;
    }

    std::vector<double> abs_errs, rel_errs, rmses;
    for (const auto& [gid, unused] : target_ids) {
        (void)unused;
        TargetEval row;
        row.gt_id = gid;
        // Every gated point of every assigned track counts toward the RMSE;
        // the closest one per frame decides the frame's primary track.
        double sq = 0.0;
        int n_sq = 0;
        std::map<int, std::pair<double, int>> per_frame;
        for (std::size_t ti = 0; ti < tracks.size(); ++ti) {
            if (assigned[ti] != gid) continue;
            for (std::size_t k = 0; k < tracks[ti].points.size(); ++k) {
                const Vote& v = votes[ti][k];
                if (!v.hit || v.gt_id != gid) continue;
                sq += v.dist * v.dist;
                ++n_sq;
                const std::pair<double, int> cand{v.dist, tracks[ti].target_id};
                const int f = tracks[ti].points[k].frame_index;
                auto it = per_frame.find(f);
                if (it == per_frame.end() || cand < it->second) per_frame[f] = cand;
            }
        }
        row.matched_frames = static_cast<int>(per_frame.size());
        std::map<int, int> frames_per_track;
        int prev = std::numeric_limits<int>::min();
        for (const auto& [f, c] : per_frame) {
            (void)f;
            ++frames_per_track[c.second];
            if (prev != std::numeric_limits<int>::min() && c.second != prev) ++row.id_switches;
            prev = c.second;
        }
        row.traj_rmse_px = n_sq > 0 ? std::sqrt(sq / n_sq) : 0.0;
        int best = 0;
        for (const auto& [id, n] : frames_per_track) {
            if (n > best) {
                best = n;
                row.primary_track = id;
            }
        }

        const auto vit = vectors.find(gid);
        std::map<int, double> gt_speed_at;
        if (vit != vectors.end())
            for (const MotionVector& mv : vit->second)
                gt_speed_at[mv.frame_index] = speed_from_displacement(mv.u, mv.v, cal);

        // GT speed over the same frames the estimate averages, in the same order.
        double gt_sum = 0.0;
        int gt_n = 0;
        if (!frames_per_track.empty()) {
            const Track* primary = nullptr;
            for (const Track& t : tracks)
                if (t.target_id == row.primary_track) primary = &t;
            if (primary != nullptr && !primary->points.empty()) {
                row.est_speed_mps = smoothed_speed(*primary, cal, cfg.speed_window);
                int used = 0;
                for (auto it = primary->points.rbegin();
                     it != primary->points.rend() && used < cfg.speed_window; ++it) {
                    if (!it->reliable) continue;
                    ++used;
                    auto g = gt_speed_at.find(it->frame_index);
                    if (g == gt_speed_at.end()) continue;
                    gt_sum += g->second;
                    ++gt_n;
                }
            }
        }
        if (gt_n == 0) {
            for (const auto& [f, s] : gt_speed_at) {
                (void)f;
                gt_sum += s;
                ++gt_n;
            }
        }
        row.gt_speed_mps = gt_n > 0 ? gt_sum / gt_n : 0.0;
        row.speed_abs_err_mps = std::abs(row.est_speed_mps - row.gt_speed_mps);
        if (row.gt_speed_mps > 0.0) row.speed_rel_err = row.speed_abs_err_mps / row.gt_speed_mps;

        if (row.matched_frames > 0) {
            abs_errs.push_back(row.speed_abs_err_mps);
            if (row.speed_rel_err) rel_errs.push_back(*row.speed_rel_err);
            rmses.push_back(row.traj_rmse_px);
        }
        report.total_id_switches += row.id_switches;
        report.targets.push_back(row);
    }
    report.mean_speed_abs_err_mps = mean(abs_errs);
    report.mean_speed_rel_err = mean(rel_errs);
    report.mean_traj_rmse_px = mean(rmses);
    report.no_overlap = rmses.empty();
    if (report.no_overlap) log_warn("eval: no track overlaps any ground-truth target");
    return report;
}

std::string report_to_json(const EvalReport& r) {
    using nlohmann::json;
    json targets = json::array();
    for (const TargetEval& t : r.targets) {
        targets.push_back({{"gt_id", t.gt_id},
                           {"primary_track", t.primary_track},
                           {"gt_speed_mps", t.gt_speed_mps},
                           {"est_speed_mps", t.est_speed_mps},
                           {"speed_abs_err_mps", t.speed_abs_err_mps},
                           {"speed_rel_err", t.speed_rel_err ? json(*t.speed_rel_err) : json(nullptr)},
                           {"traj_rmse_px", t.traj_rmse_px},
                           {"matched_frames", t.matched_frames},
                           {"id_switches", t.id_switches}});
    }
    json j = {{"targets", targets},
              {"aggregate",
               {{"mean_speed_abs_err_mps", r.mean_speed_abs_err_mps},
                {"mean_speed_rel_err", r.mean_speed_rel_err},
                {"mean_traj_rmse_px", r.mean_traj_rmse_px},
                {"total_id_switches", r.total_id_switches},
                {"track_count", r.track_count},
                {"lobe_tracks", r.lobe_tracks},
                {"unmatched_tracks", r.unmatched_tracks},
                {"no_overlap", r.no_overlap}}},
              {"config",
               {{"min_gate_px", r.config.min_gate_px},
                {"speed_window", r.config.speed_window},
                {"meters_per_pixel", r.calibration.meters_per_pixel},
                {"fps", r.calibration.fps}}}};
    return j.dump(2);
}

void write_report(const EvalReport& report, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write report " + path.string());
    out << report_to_json(report) << '\n';
    if (!out) throw IoError("failed writing report " + path.string());
}

std::string report_table(const EvalReport& r) {
    std::string s;
    char line[256];
    std::snprintf(line, sizeof line, "%-7s %-6s %9s %9s %9s %8s %8s %7s %8s\n", "target", "track",
                  "gt_mps", "est_mps", "abs_err", "rel_err", "rmse_px", "frames", "switches");
    s += line;
    for (const TargetEval& t : r.targets) {
        char rel[32] = "n/a";
        if (t.speed_rel_err) std::snprintf(rel, sizeof rel, "%.1f%%", 100.0 * *t.speed_rel_err);
        std::snprintf(line, sizeof line, "%-7d %-6d %9.3f %9.3f %9.3f %8s %8.2f %7d %8d\n", t.gt_id,
                      t.primary_track, t.gt_speed_mps, t.est_speed_mps, t.speed_abs_err_mps, rel,
                      t.traj_rmse_px, t.matched_frames, t.id_switches);
        s += line;
    }
    std::snprintf(line, sizeof line, "%-7s %-6s %9s %9s %9.3f %7.1f%% %8.2f %7s %8d\n", "mean", "", "",
                  "", r.mean_speed_abs_err_mps, 100.0 * r.mean_speed_rel_err, r.mean_traj_rmse_px, "",
                  r.total_id_switches);
    s += line;
    std::snprintf(line, sizeof line, "tracks %d, lobe tracks %d, unmatched %d%s\n", r.track_count,
                  r.lobe_tracks, r.unmatched_tracks, r.no_overlap ? ", NO OVERLAP" : "");
    s += line;
    return s;
}

}  // namespace sonarflow
