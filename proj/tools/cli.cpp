#include "cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "sonarflow/config.hpp"
#include "sonarflow/error.hpp"
#include "sonarflow/eval.hpp"
#include "sonarflow/log.hpp"
#include "sonarflow/parallel.hpp"
#include "sonarflow/render.hpp"
#include "sonarflow/synth.hpp"
#include "sonarflow/tracking.hpp"
#include "sonarflow/version.hpp"

namespace sonarflow::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_text(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << text << '\n';
    if (!out) throw IoError("failed writing " + path.string());
}

void make_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

struct CommonFlags {
    unsigned threads = 0;
    std::string log_level = "warn";
    std::optional<std::uint64_t> seed;
    std::uint64_t seed_value = 0;
    CLI::Option* seed_opt = nullptr;

    void add(CLI::App* app) {
        app->add_option("--threads", threads, "Worker threads (0 = all cores)");
        app->add_option("--log-level", log_level, "debug|info|warn|error|off");
        seed_opt = app->add_option("--seed", seed_value, "RNG seed override");
    }

    void apply() {
        set_log_level(parse_log_level(log_level));
        if (seed_opt != nullptr && seed_opt->count() > 0) seed = seed_value;
    }
};

// Pipeline flags are applied on top of defaults and --config, and only when
// given on the command line.
class PipelineFlags {
public:
    explicit PipelineFlags(CLI::App* app) {
        app->add_option("--config", config_path_, "JSON file overriding pipeline defaults");
        add(app, "--bg-frames", "Background model frames (0 = auto)", v_.preprocess.bg_frames,
            [](PipelineConfig& c, const PipelineConfig& s) { c.preprocess.bg_frames = s.preprocess.bg_frames; });
        add(app, "--hole-thresh", "Dark-hole threshold inside the ROI", v_.preprocess.hole_thresh,
            [](PipelineConfig& c, const PipelineConfig& s) { c.preprocess.hole_thresh = s.preprocess.hole_thresh; });
        auto* inpaint = app->add_option("--inpaint", inpaint_, "telea|biharmonic|none")
                            ->check(CLI::IsMember({"telea", "biharmonic", "none"}));
        appliers_.emplace_back(inpaint, [this](PipelineConfig& c, const PipelineConfig&) {
            c.preprocess.inpaint = parse_inpaint_method(inpaint_);
        });
        add(app, "--gf-radius", "Guided filter radius", v_.preprocess.gf_radius,
            [](PipelineConfig& c, const PipelineConfig& s) { c.preprocess.gf_radius = s.preprocess.gf_radius; });
        add(app, "--gf-eps", "Guided filter regularization", v_.preprocess.gf_eps,
            [](PipelineConfig& c, const PipelineConfig& s) { c.preprocess.gf_eps = s.preprocess.gf_eps; });
        add(app, "--roi-quantile", "Saliency quantile for the ROI threshold", v_.saliency.roi_quantile,
            [](PipelineConfig& c, const PipelineConfig& s) { c.saliency.roi_quantile = s.saliency.roi_quantile; });
        add(app, "--min-blob-area", "Smallest blob kept, px", v_.saliency.min_blob_area,
            [](PipelineConfig& c, const PipelineConfig& s) { c.saliency.min_blob_area = s.saliency.min_blob_area; });
        add(app, "--min-mean-intensity", "Smallest mean blob intensity kept", v_.saliency.min_mean_intensity,
            [](PipelineConfig& c, const PipelineConfig& s) {
                c.saliency.min_mean_intensity = s.saliency.min_mean_intensity;
            });
        add(app, "--stride", "Frame interval between flow pairs", v_.stride,
            [](PipelineConfig& c, const PipelineConfig& s) { c.stride = s.stride; });
        add(app, "--fb-levels", "Flow pyramid levels", v_.flow.levels,
            [](PipelineConfig& c, const PipelineConfig& s) { c.flow.levels = s.flow.levels; });
        add(app, "--fb-win", "Flow averaging window, px (odd)", v_.flow.win_size,
            [](PipelineConfig& c, const PipelineConfig& s) { c.flow.win_size = s.flow.win_size; });
        add(app, "--fb-iters", "Flow iterations per level", v_.flow.iterations,
            [](PipelineConfig& c, const PipelineConfig& s) { c.flow.iterations = s.flow.iterations; });
        add(app, "--fb-poly-n", "Polynomial expansion neighborhood (odd)", v_.flow.poly_n,
            [](PipelineConfig& c, const PipelineConfig& s) { c.flow.poly_n = s.flow.poly_n; });
        add(app, "--fb-poly-sigma", "Polynomial expansion Gaussian sigma", v_.flow.poly_sigma,
            [](PipelineConfig& c, const PipelineConfig& s) { c.flow.poly_sigma = s.flow.poly_sigma; });
        add(app, "--max-assoc-dist", "Association gate, px", v_.tracker.max_assoc_dist,
            [](PipelineConfig& c, const PipelineConfig& s) { c.tracker.max_assoc_dist = s.tracker.max_assoc_dist; });
        add(app, "--max-gap", "Frames a track may go unseen", v_.tracker.max_gap,
            [](PipelineConfig& c, const PipelineConfig& s) { c.tracker.max_gap = s.tracker.max_gap; });
        add(app, "--speed-window", "Measurements averaged for the speed", v_.tracker.speed_window,
            [](PipelineConfig& c, const PipelineConfig& s) { c.tracker.speed_window = s.tracker.speed_window; });
        add(app, "--crosstalk-axis-ratio", "Azimuth/range elongation of a lobe", v_.tracker.crosstalk_axis_ratio,
            [](PipelineConfig& c, const PipelineConfig& s) {
                c.tracker.crosstalk_axis_ratio = s.tracker.crosstalk_axis_ratio;
            });
        add(app, "--crosstalk-intensity-ratio", "Lobe/target intensity ceiling",
            v_.tracker.crosstalk_intensity_ratio, [](PipelineConfig& c, const PipelineConfig& s) {
                c.tracker.crosstalk_intensity_ratio = s.tracker.crosstalk_intensity_ratio;
            });
        add(app, "--min-track-points", "Shortest track reported", v_.tracker.min_track_points,
            [](PipelineConfig& c, const PipelineConfig& s) { c.tracker.min_track_points = s.tracker.min_track_points; });
        auto* norej = app->add_flag("--no-crosstalk-rejection", no_rejection_, "Keep crosstalk side lobes");
        appliers_.emplace_back(norej, [](PipelineConfig& c, const PipelineConfig&) {
            c.tracker.crosstalk_rejection = false;
        });
    }

    PipelineFlags(const PipelineFlags&) = delete;
    PipelineFlags& operator=(const PipelineFlags&) = delete;

    /// Defaults, then --config, then explicit flags; validated.
    PipelineConfig resolve(unsigned threads) const {
        PipelineConfig cfg;
        if (!config_path_.empty()) cfg = pipeline_config_from_json(read_text(config_path_), cfg);
        for (const auto& [opt, apply] : appliers_)
            if (opt->count() > 0) apply(cfg, v_);
        cfg.threads = threads;
        cfg.validate();
        return cfg;
    }

private:
    using Applier = std::function<void(PipelineConfig&, const PipelineConfig&)>;

    template <typename T>
    void add(CLI::App* app, const std::string& name, const std::string& desc, T& slot, Applier fn) {
        appliers_.emplace_back(app->add_option(name, slot, desc), std::move(fn));
    }

    PipelineConfig v_;
    std::string config_path_;
    std::string inpaint_ = "telea";
    bool no_rejection_ = false;
    std::vector<std::pair<CLI::Option*, Applier>> appliers_;
};

json input_hashes(const fs::path& manifest_path) {
    const Manifest m = read_manifest(manifest_path);
    json files = json::object();
    files[manifest_path.filename().string()] = sha256_file(manifest_path);
    for (const std::string& f : m.frames) files[f] = sha256_file(manifest_path.parent_path() / f);
    return files;
}

json run_metadata(const std::string& command, const PipelineConfig& cfg, const CommonFlags& common,
                  const fs::path& manifest_path) {
    json deps = json::object();
    for (const auto& [name, ver] : dependency_versions()) deps[name] = ver;
    json meta = {{"tool", "sonarflow"},
                 {"version", std::string(version())},
                 {"command", command},
                 {"dependencies", deps},
                 {"input", {{"manifest", manifest_path.string()}, {"sha256", input_hashes(manifest_path)}}},
                 {"pipeline", json::parse(pipeline_config_to_json(cfg))},
                 {"threads", cfg.threads}};
    meta["seed"] = common.seed ? json(*common.seed) : json(nullptr);
    return meta;
}

std::vector<Track> run_tracking(const Sequence& seq, const PipelineConfig& cfg) {
    try {
        return run_pipeline(seq, cfg);
    } catch (const InputError& e) {
        throw PipelineError(e.what());
    }
}

void print_tracks(std::ostream& out, const std::vector<Track>& tracks, const PipelineConfig& cfg,
                  const ImageCalibration& cal) {
    char line[160];
    out << tracks.size() << " track(s)\n";
    for (const Track& t : tracks) {
        std::snprintf(line, sizeof line, "  track %-3d frames %4d-%-4d points %4zu  speed %.3f m/s\n",
                      t.target_id, t.points.front().frame_index, t.points.back().frame_index,
                      t.points.size(), smoothed_speed(t, cal, cfg.tracker.speed_window));
        out << line;
    }
}

ImageSize frame_size(const fs::path& manifest_path) {
    const Manifest m = read_manifest(manifest_path);
    if (m.frames.empty()) throw IoError("manifest lists no frames: " + manifest_path.string());
    const auto first = read_gray8(manifest_path.parent_path() / m.frames.front());
    return {first.width(), first.height()};
}

int cmd_synth(const std::string& preset_name, const std::string& scene_path, const fs::path& out_dir,
              const CommonFlags& common, std::ostream& out) {
    if (preset_name.empty() == scene_path.empty())
        throw InputError("synth: give exactly one of --preset or --config");
    SynthScene scene = preset_name.empty() ? load_scene(scene_path) : preset(preset_name);
    if (common.seed) scene.rng_seed = *common.seed;
    scene.validate();
    make_dir(out_dir);
    const GeneratedPaths p = generate(scene, out_dir, common.threads);
    out << "scene '" << scene.name << "': " << scene.duration_frames << " frames, " << scene.targets.size()
        << " target(s)\n  manifest " << p.manifest.string() << "\n  gt       " << p.gt.string() << '\n';
    return ok;
}

int cmd_track(const fs::path& input, const fs::path& out_dir, const PipelineFlags& flags,
              const CommonFlags& common, std::ostream& out) {
    const PipelineConfig cfg = flags.resolve(common.threads);
    const fs::path manifest = resolve_manifest_path(input);
    const Sequence seq = load_sequence(manifest, common.threads);
    const std::vector<Track> tracks = run_tracking(seq, cfg);
    make_dir(out_dir);
    write_tracks(to_records(tracks), out_dir / "tracks.csv");
    write_text(out_dir / "run_metadata.json", run_metadata("track", cfg, common, manifest).dump(2));
    print_tracks(out, tracks, cfg, seq.calibration);
    out << "wrote " << (out_dir / "tracks.csv").string() << '\n';
    return ok;
}

int cmd_eval(const fs::path& input, const fs::path& tracks_path, const fs::path& gt_path, fs::path report_path,
             const EvalConfig& ecfg, std::ostream& out) {
    const fs::path manifest = resolve_manifest_path(input);
    const Manifest m = read_manifest(manifest);
    const ImageSize size = frame_size(manifest);
    const auto records = read_tracks(tracks_path);
    const auto gt = load_gt(gt_path, size);
    const auto tracks = tracks_from_records(records, m.calibration, size.width, size.height);
    const EvalReport report = compare(tracks, gt, m.calibration, ecfg);
    if (report_path.empty()) report_path = tracks_path.parent_path() / "report.json";
    write_report(report, report_path);
    out << report_table(report) << "wrote " << report_path.string() << '\n';
    return ok;
}

int cmd_render(const fs::path& input, const fs::path& tracks_path, const std::string& gt_path,
               const fs::path& out_dir, int flow_every, bool stages, const PipelineFlags& flags,
               const CommonFlags& common, std::ostream& out) {
    if (flow_every < 0) throw InputError("--flow-every must be >= 0");
    const PipelineConfig cfg = flags.resolve(common.threads);
    const fs::path manifest = resolve_manifest_path(input);
    const Sequence seq = load_sequence(manifest, common.threads);
    const auto tracks = tracks_from_records(read_tracks(tracks_path), seq.calibration, seq.width(), seq.height());
    std::optional<std::vector<GtBox>> gt;
    if (!gt_path.empty()) gt = load_gt(gt_path, ImageSize{seq.width(), seq.height()});
    const auto written = render_overlay(seq, tracks, gt, out_dir, OverlayStyle{}, common.threads);
    std::size_t extra = 0;
    if (flow_every > 0 || stages) {
        std::vector<FrameStage> st;
        try {
            st = condition_sequence(seq, cfg);
        } catch (const InputError& e) {
            throw PipelineError(e.what());
        }
        const int step = flow_every > 0 ? flow_every : 1;
        std::vector<std::size_t> picks;
        for (std::size_t i = 0; i + static_cast<std::size_t>(cfg.stride) < seq.size(); i += step) picks.push_back(i);
        parallel_for(picks.size(), common.threads, [&](std::size_t k) {
            const std::size_t i = picks[k];
            const int idx = seq.frames[i].index;
            if (flow_every > 0) {
                const FlowField flow = farneback(st[i].conditioned.intensities,
                                                 st[i + static_cast<std::size_t>(cfg.stride)].conditioned.intensities,
                                                 cfg.flow)
                                           .scaled(1.0 / cfg.stride);
                char name[32];
                std::snprintf(name, sizeof name, "flow_%04d.png", idx);
                render_flow(flow, out_dir / name, OverlayStyle{}, &st[i].conditioned.intensities);
            }
            if (stages) render_stage(st[i], out_dir, idx);
        });
        extra = picks.size();
    }
    out << "wrote " << written.size() << " overlay(s)";
    if (extra > 0) out << " and " << extra << " flow/stage snapshot set(s)";
    out << " to " << out_dir.string() << '\n';
    return ok;
}

std::string timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    localtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y%m%d-%H%M%S", &tm);
    return buf;
}

fs::path fresh_run_dir(const fs::path& base) {
    const std::string stamp = "demo-" + timestamp();
    fs::path dir = base / stamp;
    for (int k = 2; fs::exists(dir); ++k) dir = base / (stamp + "-" + std::to_string(k));
    return dir;
}

int cmd_demo(const std::vector<std::string>& presets, const fs::path& base, const std::string& run_dir,
             bool render, const PipelineFlags& flags, const CommonFlags& common, std::ostream& out) {
    const PipelineConfig cfg = flags.resolve(common.threads);
    std::vector<std::string> names = presets.empty() ? preset_names() : presets;
    std::vector<SynthScene> scenes;
    for (const std::string& n : names) scenes.push_back(preset(n));  // unknown names fail before any work
    const fs::path root = run_dir.empty() ? fresh_run_dir(base) : fs::path(run_dir);
    make_dir(root);

    std::string table;
    char line[256];
    std::snprintf(line, sizeof line, "%-18s %-6s %9s %9s %9s %8s %8s %8s %6s\n", "preset", "target",
                  "script", "gt_mps", "est_mps", "rel_err", "rmse_px", "switches", "lobes");
    table += line;
    for (SynthScene& scene : scenes) {
        if (common.seed) scene.rng_seed = *common.seed;
        const fs::path dir = root / scene.name;
        const fs::path scene_dir = dir / "scene";
        make_dir(scene_dir);
        const GeneratedPaths paths = generate(scene, scene_dir, common.threads);
        const Sequence seq = load_sequence(paths.manifest, common.threads);
        const std::vector<Track> tracks = run_tracking(seq, cfg);
        write_tracks(to_records(tracks), dir / "tracks.csv");
        write_text(dir / "run_metadata.json", run_metadata("demo", cfg, common, paths.manifest).dump(2));
        const auto gt = load_gt(paths.gt, ImageSize{seq.width(), seq.height()});
        EvalConfig ecfg;
        ecfg.speed_window = cfg.tracker.speed_window;
        const EvalReport report = compare(tracks, gt, seq.calibration, ecfg);
        write_report(report, dir / "report.json");
        if (render) render_overlay(seq, tracks, gt, dir / "overlay", OverlayStyle{}, common.threads);

        for (const TargetEval& t : report.targets) {
            double scripted = 0.0;
            for (const SynthTarget& st : scene.targets)
                if (st.id == t.gt_id) scripted = std::hypot(st.path.velocity_x_mps, st.path.velocity_y_mps);
            char rel[32] = "n/a";
            if (t.speed_rel_err) std::snprintf(rel, sizeof rel, "%.1f%%", 100.0 * *t.speed_rel_err);
            std::snprintf(line, sizeof line, "%-18s %-6d %9.3f %9.3f %9.3f %8s %8.2f %8d %6d\n",
                          scene.name.c_str(), t.gt_id, scripted, t.gt_speed_mps, t.est_speed_mps, rel,
                          t.traj_rmse_px, t.id_switches, report.lobe_tracks);
            table += line;
        }
    }
    out << table << "results in " << root.string() << '\n';
    return ok;
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Marine debris motion monitoring for forward-looking sonar sequences", "sonarflow"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(version()));

    CommonFlags synth_common, track_common, render_common, demo_common, eval_common;

    auto* synth = app.add_subcommand("synth", "Generate a synthetic sequence with ground truth");
    std::string synth_preset, synth_scene;
    fs::path synth_out;
    synth->add_option("--preset", synth_preset, "Preset scene name");
    synth->add_option("--config", synth_scene, "Scene JSON file");
    synth->add_option("--out", synth_out, "Output directory")->required();
    synth_common.add(synth);

    auto* track = app.add_subcommand("track", "Run the monitoring pipeline on a sequence");
    fs::path track_in, track_out;
    track->add_option("--input", track_in, "Sequence directory or manifest")->required();
    track->add_option("--out", track_out, "Output directory")->required();
    PipelineFlags track_flags(track);
    track_common.add(track);

    auto* eval = app.add_subcommand("eval", "Compare tracks against ground truth");
    fs::path eval_in, eval_tracks, eval_gt, eval_out;
    EvalConfig ecfg;
    eval->add_option("--input", eval_in, "Sequence directory or manifest (calibration)")->required();
    eval->add_option("--tracks", eval_tracks, "tracks.csv")->required();
    eval->add_option("--gt", eval_gt, "gt.json")->required();
    eval->add_option("--out", eval_out, "Report JSON (default: report.json next to the tracks)");
    eval->add_option("--speed-window", ecfg.speed_window, "Measurements averaged for the speed");
    eval->add_option("--min-gate", ecfg.min_gate_px, "Smallest matching gate, px");
    eval_common.add(eval);

    auto* render = app.add_subcommand("render", "Draw trajectory overlays and flow rasters");
    fs::path render_in, render_tracks, render_out;
    std::string render_gt;
    int flow_every = 0;
    bool stages = false;
    render->add_option("--input", render_in, "Sequence directory or manifest")->required();
    render->add_option("--tracks", render_tracks, "tracks.csv")->required();
    render->add_option("--gt", render_gt, "gt.json");
    render->add_option("--out", render_out, "Output directory")->required();
    render->add_option("--flow-every", flow_every, "Quiver raster every N frame pairs (0 = off)");
    render->add_flag("--stages", stages, "Also dump saliency, ROI and conditioned frames");
    PipelineFlags render_flags(render);
    render_common.add(render);

    auto* demo = app.add_subcommand("demo", "synth, track, eval and render for preset scenes");
    std::vector<std::string> demo_presets;
    fs::path demo_base = "sonarflow-runs";
    std::string demo_run_dir;
    bool no_render = false;
    demo->add_option("--preset", demo_presets, "Preset(s) to run (default: all)");
    demo->add_option("--out", demo_base, "Parent of the timestamped run directory");
    demo->add_option("--run-dir", demo_run_dir, "Exact run directory instead of a timestamped one");
    demo->add_flag("--no-render", no_render, "Skip overlay images");
    PipelineFlags demo_flags(demo);
    demo_common.add(demo);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return ok;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return ok;
    } catch (const CLI::CallForVersion&) {
        out << version() << '\n';
        return ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\nRun with --help for usage.\n";
        return usage;
    }

    if (*synth) {
        synth_common.apply();
        return cmd_synth(synth_preset, synth_scene, synth_out, synth_common, out);
    }
    if (*track) {
        track_common.apply();
        return cmd_track(track_in, track_out, track_flags, track_common, out);
    }
    if (*eval) {
        eval_common.apply();
        return cmd_eval(eval_in, eval_tracks, eval_gt, eval_out, ecfg, out);
    }
    if (*render) {
        render_common.apply();
        return cmd_render(render_in, render_tracks, render_gt, render_out, flow_every, stages, render_flags,
                          render_common, out);
    }
    demo_common.apply();
    return cmd_demo(demo_presets, demo_base, demo_run_dir, !no_render, demo_flags, demo_common, out);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    try {
        return dispatch(args, out, err);
    } catch (const InputError& e) {
        err << "error: " << e.what() << '\n';
        return usage;
    } catch (const IoError& e) {
        err << "I/O error: " << e.what() << '\n';
        return io_failure;
    } catch (const PipelineError& e) {
        err << "pipeline error: " << e.what() << '\n';
        return pipeline_failure;
    } catch (const std::exception& e) {
        err << "pipeline error: " << e.what() << '\n';
        return pipeline_failure;
    }
}

}  // namespace sonarflow::cli
