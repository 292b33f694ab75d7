#include "sonarflow/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"
#include "sonarflow/error.hpp"
#include "sonarflow/parallel.hpp"

namespace sonarflow {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kSupersample = 4;
constexpr int kTextureWaves = 8;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    return splitmix64(splitmix64(seed ^ splitmix64(a)) ^ splitmix64(b + 0x51ed2701ULL));
}

struct Wave {
    double kx, ky, phase, weight;
};

// Smooth deterministic surface pattern in target-local coordinates.
struct Texture {
    std::vector<Wave> waves;
    double norm = 1.0;

    double operator()(double lx, double ly) const {
        double s = 0.0;
        for (const Wave& w : waves) s += w.weight * std::cos(w.kx * lx + w.ky * ly + w.phase);
        return s / norm;
    }
};

Texture make_texture(std::uint64_t seed, int id, int salt) {
    std::mt19937_64 rng(stream_seed(seed, 0x7e47u + static_cast<std::uint64_t>(salt),
                                    static_cast<std::uint64_t>(id) + 1000));
    std::uniform_real_distribution<double> wavelength(5.0, 12.0);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * kPi);
    std::uniform_real_distribution<double> weight(0.5, 1.0);
    Texture t;
    double total = 0.0;
    for (int k = 0; k < kTextureWaves; ++k) {
        const double lambda = wavelength(rng);
        const double dir = angle(rng);
        const double ph = angle(rng);
        const double wt = weight(rng);
        t.waves.push_back({2.0 * kPi / lambda * std::cos(dir), 2.0 * kPi / lambda * std::sin(dir), ph, wt});
        total += wt;
    }
    // Roughly unit peak: the sum of random-phase waves rarely exceeds half its bound.
    t.norm = 0.5 * total;
    return t;
}

double px_per_frame(double mps, const ImageCalibration& cal) {
    return mps / (cal.meters_per_pixel * cal.fps);
}

// Semi-axes (or capsule half-extents) of a shape at frame t, plus the
// factors that stretch the texture with the deformation.
struct ShapeState {
    ShapeKind kind;
    double a;  // along the long (local x) axis
    double b;  // along local y
    double stretch_x;
    double stretch_y;
    double theta;
};

ShapeState shape_state(const SynthShape& s, int frame) {
    const double theta = deg_to_rad(s.orientation_deg);
    switch (s.kind) {
        case ShapeKind::ellipse: return {s.kind, s.w / 2, s.h / 2, 1.0, 1.0, theta};
        case ShapeKind::capsule: return {s.kind, s.len / 2, s.width / 2, 1.0, 1.0, theta};
        case ShapeKind::deformable_bag: {
            const double phase = std::sin(2.0 * kPi * s.deform_freq * frame);
            const double fa = 1.0 + s.deform_amp * phase;
            const double fb = 1.0 - s.deform_amp * phase;
            return {s.kind, s.base_radius * fa, s.base_radius * fb, fa, fb, theta};
        }
    }
    return {s.kind, 1, 1, 1, 1, theta};
}

bool inside_shape(const ShapeState& st, double lx, double ly) {
    if (st.kind == ShapeKind::capsule) {
        const double half_seg = std::max(0.0, st.a - st.b);
        const double cx = std::clamp(lx, -half_seg, half_seg);
        return (lx - cx) * (lx - cx) + ly * ly <= st.b * st.b;
    }
    return (lx * lx) / (st.a * st.a) + (ly * ly) / (st.b * st.b) <= 1.0;
}

// Axis-aligned half extents of a rotated shape.
std::pair<double, double> half_extents(const ShapeState& st) {
    const double c = std::abs(std::cos(st.theta));
    const double s = std::abs(std::sin(st.theta));
    if (st.kind == ShapeKind::capsule) {
        const double half_seg = std::max(0.0, st.a - st.b);
        return {c * half_seg + st.b, s * half_seg + st.b};
    }
    return {std::sqrt(st.a * st.a * c * c + st.b * st.b * s * s),
            std::sqrt(st.a * st.a * s * s + st.b * st.b * c * c)};
}

struct Placement {
    Point2 center;
    ShapeState state;
    double intensity;
    const Texture* texture;
    double texture_amp;
};

void paint(ImageF& img, const Placement& p, std::mt19937_64& rng, double dropout_prob,
           double speckle_mean, double speckle_std) {
    const auto [hx, hy] = half_extents(p.state);
    const int x0 = std::max(0, static_cast<int>(std::floor(p.center.x - hx - 1)));
    const int x1 = std::min(img.width() - 1, static_cast<int>(std::ceil(p.center.x + hx + 1)));
    const int y0 = std::max(0, static_cast<int>(std::floor(p.center.y - hy - 1)));
    const int y1 = std::min(img.height() - 1, static_cast<int>(std::ceil(p.center.y + hy + 1)));
    const double ct = std::cos(p.state.theta);
    const double stn = std::sin(p.state.theta);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> speckle(speckle_mean, speckle_std);
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            int hits = 0;
            for (int sy = 0; sy < kSupersample; ++sy) {
                for (int sx = 0; sx < kSupersample; ++sx) {
                    const double dx = x + (sx + 0.5) / kSupersample - 0.5 - p.center.x;
                    const double dy = y + (sy + 0.5) / kSupersample - 0.5 - p.center.y;
                    const double lx = dx * ct + dy * stn;
                    const double ly = -dx * stn + dy * ct;
                    hits += inside_shape(p.state, lx, ly) ? 1 : 0;
                }
            }
            if (hits == 0) continue;
            const double cov = static_cast<double>(hits) / (kSupersample * kSupersample);
            const double dx = x - p.center.x;
            const double dy = y - p.center.y;
            const double lx = (dx * ct + dy * stn) / p.state.stretch_x;
            const double ly = (-dx * stn + dy * ct) / p.state.stretch_y;
            double value = p.intensity * (1.0 + p.texture_amp * (*p.texture)(lx, ly));
            if (dropout_prob > 0.0 && cov >= 0.5 && unit(rng) < dropout_prob)
                value = std::max(0.0, speckle(rng));
            img(x, y) = std::clamp(img(x, y) * (1.0 - cov) + value * cov, 0.0, 1.0);
        }
    }
}

// Two lobes flanking the target on its range arc.
std::array<Point2, 2> lobe_centers(const Point2& c, const CrosstalkModel& ct, int width, int height,
                                   double& lobe_azimuth_out0, double& lobe_azimuth_out1) {
    const Apex apex = apex_of(width, height);
    const double dx = c.x - apex.x;
    const double dy = apex.y - c.y;
    const double r = std::hypot(dx, dy);
    const double a = std::atan2(dx, dy);
    const double da = ct.lobe_azimuth_offset_px / std::max(r, 1.0);
    const double a0 = a - da;
    const double a1 = a + da;
    lobe_azimuth_out0 = a0;
    lobe_azimuth_out1 = a1;
    return {Point2{apex.x + r * std::sin(a0), apex.y - r * std::cos(a0)},
            Point2{apex.x + r * std::sin(a1), apex.y - r * std::cos(a1)}};
}

ShapeState lobe_state(const CrosstalkModel& ct, double azimuth) {
    const double half_range = ct.lobe_range_extent_px / 2;
    return {ShapeKind::ellipse, half_range * ct.lobe_aspect, half_range, 1.0, 1.0, azimuth};
}

bool box_in_fan(double cx, double cy, double hx, double hy, const SynthScene& s) {
    const double half_fov = deg_to_rad(s.calibration.fov_azimuth_deg) / 2;
    for (int sx = -1; sx <= 1; sx += 2) {
        for (int sy = -1; sy <= 1; sy += 2) {
            const double x = cx + sx * hx;
            const double y = cy + sy * hy;
            if (x < -0.5 || y < -0.5 || x > s.width - 0.5 || y > s.height - 0.5) return false;
            const PixelPolar pp = pixel_to_polar(x, y, s.width, s.height, s.calibration);
            if (pp.range_m < s.calibration.range_min_m || pp.range_m > s.calibration.range_max_m)
                return false;
            if (std::abs(pp.azimuth_rad) > half_fov) return false;
        }
    }
    return true;
}

}  // namespace

Point2 target_center(const SynthTarget& t, const ImageCalibration& cal, int frame) {
    const double vx = px_per_frame(t.path.velocity_x_mps, cal);
    const double vy = px_per_frame(t.path.velocity_y_mps, cal);
    Point2 c{t.path.start_x + vx * frame, t.path.start_y + vy * frame};
    if (t.path.kind == PathKind::sinusoid) {
        const double speed = std::hypot(vx, vy);
        const double nx = speed > 0 ? -vy / speed : 0.0;
        const double ny = speed > 0 ? vx / speed : 1.0;
        const double off = t.path.amp_px * std::sin(2.0 * kPi * frame / t.path.period_frames + t.path.phase);
        c.x += nx * off;
        c.y += ny * off;
    }
    return c;
}

void SynthScene::validate() const {
    calibration.validate();
    if (width < 16 || height < 16) throw InputError("scene: raster must be at least 16x16");
    if (duration_frames < 2) throw InputError("scene: duration_frames must be >= 2");
    if (!(dropout_prob >= 0.0 && dropout_prob <= 1.0))
        throw InputError("scene: dropout_prob must lie in [0, 1]");
    if (!(speckle_mean >= 0.0 && speckle_mean <= 1.0) || !(speckle_std >= 0.0))
        throw InputError("scene: speckle mean must lie in [0, 1] and std >= 0");
    if (crosstalk.enabled && !(crosstalk.lobe_gain >= 0.0 && crosstalk.lobe_gain <= 1.0))
        throw InputError("scene: crosstalk lobe_gain must lie in [0, 1]");
    for (const SynthTarget& t : targets) {
        if (!(t.intensity >= 0.0 && t.intensity <= 1.0))
            throw InputError("scene: target intensity must lie in [0, 1]");
        if (t.path.kind == PathKind::sinusoid && !(t.path.period_frames > 0.0))
            throw InputError("scene: sinusoid period must be > 0");
        for (int f = 0; f < duration_frames; ++f) {
            const Point2 c = target_center(t, calibration, f);
            const auto [hx, hy] = half_extents(shape_state(t.shape, f));
            if (!box_in_fan(c.x, c.y, hx, hy, *this))
                throw InputError("scene: target " + std::to_string(t.id) +
                                 " exits the fan mask at frame " + std::to_string(f));
            if (crosstalk.enabled) {
                double a0 = 0, a1 = 0;
                const auto lobes = lobe_centers(c, crosstalk, width, height, a0, a1);
                const double az[2] = {a0, a1};
                for (int k = 0; k < 2; ++k) {
                    const auto [lx, ly] = half_extents(lobe_state(crosstalk, az[k]));
                    if (!box_in_fan(lobes[static_cast<std::size_t>(k)].x,
                                    lobes[static_cast<std::size_t>(k)].y, lx, ly, *this))
                        throw InputError("scene: crosstalk lobe of target " + std::to_string(t.id) +
                                         " exits the fan mask at frame " + std::to_string(f));
                }
            }
        }
    }
}

std::vector<GtBox> scene_ground_truth(const SynthScene& scene) {
    std::vector<GtBox> gt;
    for (const SynthTarget& t : scene.targets) {
        for (int f = 0; f < scene.duration_frames; ++f) {
            const Point2 c = target_center(t, scene.calibration, f);
            const auto [hx, hy] = half_extents(shape_state(t.shape, f));
            gt.push_back({f, t.id, c.x, c.y, 2 * hx, 2 * hy});
            if (!scene.crosstalk.enabled) continue;
            double a0 = 0, a1 = 0;
            const auto lobes = lobe_centers(c, scene.crosstalk, scene.width, scene.height, a0, a1);
            const double az[2] = {a0, a1};
            for (int k = 0; k < 2; ++k) {
                const auto [lx, ly] = half_extents(lobe_state(scene.crosstalk, az[k]));
                gt.push_back({f, -(2 * t.id + 1 + k), lobes[static_cast<std::size_t>(k)].x,
                              lobes[static_cast<std::size_t>(k)].y, 2 * lx, 2 * ly});
            }
        }
    }
    std::sort(gt.begin(), gt.end(), [](const GtBox& a, const GtBox& b) {
        return std::pair(a.target_id, a.frame_index) < std::pair(b.target_id, b.frame_index);
    });
    return gt;
}

RenderedScene render_scene(const SynthScene& scene, unsigned threads) {
    scene.validate();
    const Mask fan = fan_mask(scene.width, scene.height, scene.calibration);
    std::vector<Texture> textures;
    std::vector<Texture> lobe_textures;
    for (const SynthTarget& t : scene.targets) {
        textures.push_back(make_texture(scene.rng_seed, t.id, 0));
        lobe_textures.push_back(make_texture(scene.rng_seed, t.id, 1));
    }

    RenderedScene out;
    out.sequence.calibration = scene.calibration;
    out.sequence.frames.resize(static_cast<std::size_t>(scene.duration_frames));
    parallel_for(out.sequence.frames.size(), threads, [&](std::size_t fi) {
        const int f = static_cast<int>(fi);
        std::mt19937_64 rng(stream_seed(scene.rng_seed, 0xf4a3u, fi));
        std::normal_distribution<double> speckle(scene.speckle_mean, scene.speckle_std);
        ImageF img(scene.width, scene.height, 0.0);
        for (int y = 0; y < scene.height; ++y) {
            for (int x = 0; x < scene.width; ++x) {
                const double noise = std::clamp(speckle(rng), 0.0, 1.0);
                if (!fan(x, y)) continue;
                double v = noise;
                if (scene.seabed) {
                    const double r = pixel_to_polar(x, y, scene.width, scene.height, scene.calibration).range_m;
                    if (r >= scene.seabed->range_min_m && r <= scene.seabed->range_max_m)
                        v += scene.seabed->intensity;
                }
                img(x, y) = std::clamp(v, 0.0, 1.0);
            }
        }
        for (std::size_t ti = 0; ti < scene.targets.size(); ++ti) {
            const SynthTarget& t = scene.targets[ti];
            const Point2 c = target_center(t, scene.calibration, f);
            if (scene.crosstalk.enabled) {
                double a0 = 0, a1 = 0;
                const auto lobes = lobe_centers(c, scene.crosstalk, scene.width, scene.height, a0, a1);
                const double az[2] = {a0, a1};
                for (int k = 0; k < 2; ++k) {
                    paint(img,
                          {lobes[static_cast<std::size_t>(k)], lobe_state(scene.crosstalk, az[k]),
                           t.intensity * scene.crosstalk.lobe_gain, &lobe_textures[ti], t.texture_amp},
                          rng, 0.0, scene.speckle_mean, scene.speckle_std);
                }
            }
            paint(img, {c, shape_state(t.shape, f), t.intensity, &textures[ti], t.texture_amp}, rng,
                  scene.dropout_prob, scene.speckle_mean, scene.speckle_std);
        }
        Frame& frame = out.sequence.frames[fi];
        // Quantize exactly as the on-disk 8-bit frames will be.
        frame.intensities = from_gray8(to_gray8(img));
        frame.index = f;
        frame.timestamp_s = f / scene.calibration.fps;
    });
    out.gt = scene_ground_truth(scene);
    return out;
}

GeneratedPaths generate(const SynthScene& scene, const fs::path& out_dir, unsigned threads) {
    const RenderedScene r = render_scene(scene, threads);
    GeneratedPaths paths;
    paths.manifest = save_sequence(r.sequence, out_dir);
    paths.gt = out_dir / "gt.json";
    save_gt(paths.gt, r.gt);
    std::ofstream out(out_dir / "scene.json");
    if (!out) throw IoError("cannot write " + (out_dir / "scene.json").string());
    out << scene_to_json(scene) << '\n';
    return paths;
}

namespace {

SynthTarget capsule_target(int id, double x, double y, double vx, double vy) {
    SynthTarget t;
    t.id = id;
    t.shape.kind = ShapeKind::capsule;
    t.shape.len = 48;
    t.shape.width = 16;
    t.intensity = 0.75;
    t.texture_amp = 0.3;
    t.path = {PathKind::linear, x, y, vx, vy, 0, 20, 0};
    return t;
}

SynthTarget bag_target(int id, double x, double y, double vx, double vy, double phase_frames) {
    SynthTarget t;
    t.id = id;
    t.shape.kind = ShapeKind::deformable_bag;
    t.shape.base_radius = 14;
    t.shape.deform_amp = 0.3;
    t.shape.deform_freq = 0.08;
    t.shape.orientation_deg = 10.0 * phase_frames;
    t.intensity = 0.6;
    t.texture_amp = 0.35;
    t.path = {PathKind::linear, x, y, vx, vy, 0, 20, 0};
    return t;
}

SynthScene base_scene(const std::string& name, int width, int height, double fov_deg,
                      double range_max_m) {
    SynthScene s;
    s.name = name;
    s.calibration.meters_per_pixel = 0.0029;
    s.calibration.fps = 10.0;
    s.calibration.fov_azimuth_deg = fov_deg;
    s.calibration.range_min_m = 0.03;
    s.calibration.range_max_m = range_max_m;
    s.width = width;
    s.height = height;
    s.speckle_mean = 0.08;
    s.speckle_std = 0.04;
    s.rng_seed = 20250101;
    return s;
}

}  // namespace

std::map<std::string, SynthScene> default_scenes() {
    constexpr double kDrift = 0.23;
    std::map<std::string, SynthScene> m;

    SynthScene hb = base_scene("horizontal-bottle", 384, 256, 120.0, 0.95);
    hb.duration_frames = 40;
    hb.seabed = SeabedBand{0.62, 0.70, 0.2};
    hb.dropout_prob = 0.03;
    hb.targets.push_back(capsule_target(0, 40, 110, kDrift, 0));
    m.emplace(hb.name, hb);

    SynthScene hg = base_scene("horizontal-bag", 384, 256, 120.0, 0.95);
    hg.duration_frames = 40;
    hg.seabed = SeabedBand{0.62, 0.70, 0.2};
    hg.dropout_prob = 0.05;
    hg.rng_seed = 20250102;
    hg.targets.push_back(bag_target(0, 40, 110, kDrift, 0, 0));
    m.emplace(hg.name, hg);

    SynthScene vb = base_scene("vertical-bottle", 256, 384, 120.0, 1.3);
    vb.duration_frames = 40;
    vb.dropout_prob = 0.03;
    vb.rng_seed = 20250103;
    vb.targets.push_back(capsule_target(0, 128, 30, 0, kDrift));
    m.emplace(vb.name, vb);

    SynthScene vg = base_scene("vertical-bag", 256, 384, 120.0, 1.3);
    vg.duration_frames = 40;
    vg.dropout_prob = 0.05;
    vg.rng_seed = 20250104;
    vg.targets.push_back(bag_target(0, 128, 30, 0, kDrift, 0));
    m.emplace(vg.name, vg);

    SynthScene mt = base_scene("multi-0.59", 640, 256, 150.0, 1.2);
    mt.duration_frames = 26;
    mt.dropout_prob = 0.05;
    mt.rng_seed = 20250105;
    mt.targets.push_back(bag_target(0, 40, 40, 0.59, 0, 0));
    mt.targets.push_back(bag_target(1, 70, 100, 0.59, 0, 3));
    mt.targets.push_back(bag_target(2, 55, 160, 0.59, 0, 6));
    m.emplace(mt.name, mt);

    SynthScene ct = base_scene("crosstalk-demo", 512, 384, 130.0, 1.3);
    ct.duration_frames = 30;
    ct.dropout_prob = 0.03;
    ct.rng_seed = 20250106;
    ct.crosstalk.enabled = true;
    ct.crosstalk.lobe_gain = 0.45;
    ct.crosstalk.lobe_azimuth_offset_px = 64;
    ct.crosstalk.lobe_aspect = 4;
    ct.crosstalk.lobe_range_extent_px = 8;
    ct.targets.push_back(capsule_target(0, 150, 180, kDrift, 0));
    ct.targets.back().shape.len = 64;
    m.emplace(ct.name, ct);
    return m;
}

std::vector<std::string> preset_names() {
    return {"horizontal-bottle", "horizontal-bag", "vertical-bottle",
            "vertical-bag",      "multi-0.59",     "crosstalk-demo"};
}

SynthScene preset(const std::string& name) {
    auto scenes = default_scenes();
    auto it = scenes.find(name);
    if (it == scenes.end()) {
        std::string valid;
        for (const auto& n : preset_names()) valid += (valid.empty() ? "" : ", ") + n;
        throw InputError("unknown preset '" + name + "' (valid: " + valid + ")");
    }
    return it->second;
}

namespace {

const char* shape_name(ShapeKind k) {
    switch (k) {
        case ShapeKind::ellipse: return "ellipse";
        case ShapeKind::capsule: return "capsule";
        case ShapeKind::deformable_bag: return "deformable-bag";
    }
    return "?";
}

ShapeKind parse_shape(const std::string& s) {
    if (s == "ellipse") return ShapeKind::ellipse;
    if (s == "capsule") return ShapeKind::capsule;
    if (s == "deformable-bag") return ShapeKind::deformable_bag;
    throw InputError("scene: unknown shape '" + s + "'");
}

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

std::string scene_to_json(const SynthScene& s) {
    json j;
    j["name"] = s.name;
    j["calibration"] = {{"meters_per_pixel", s.calibration.meters_per_pixel},
                        {"fps", s.calibration.fps},
                        {"fov_azimuth_deg", s.calibration.fov_azimuth_deg},
                        {"fov_elevation_deg", s.calibration.fov_elevation_deg},
                        {"range_min_m", s.calibration.range_min_m},
                        {"range_max_m", s.calibration.range_max_m}};
    j["width"] = s.width;
    j["height"] = s.height;
    j["duration_frames"] = s.duration_frames;
    j["background"] = {{"speckle_mean", s.speckle_mean}, {"speckle_std", s.speckle_std}};
    if (s.seabed)
        j["background"]["seabed_band"] = {{"range_min_m", s.seabed->range_min_m},
                                          {"range_max_m", s.seabed->range_max_m},
                                          {"intensity", s.seabed->intensity}};
    json targets = json::array();
    for (const SynthTarget& t : s.targets) {
        json shape = {{"kind", shape_name(t.shape.kind)}, {"orientation_deg", t.shape.orientation_deg}};
        switch (t.shape.kind) {
            case ShapeKind::ellipse: shape["w"] = t.shape.w; shape["h"] = t.shape.h; break;
            case ShapeKind::capsule: shape["len"] = t.shape.len; shape["width"] = t.shape.width; break;
            case ShapeKind::deformable_bag:
                shape["base_radius"] = t.shape.base_radius;
                shape["deform_amp"] = t.shape.deform_amp;
                shape["deform_freq"] = t.shape.deform_freq;
                break;
        }
        json path = {{"kind", t.path.kind == PathKind::linear ? "linear" : "sinusoid"},
                     {"start_px", {t.path.start_x, t.path.start_y}},
                     {"velocity_mps", {t.path.velocity_x_mps, t.path.velocity_y_mps}}};
        if (t.path.kind == PathKind::sinusoid) {
            path["amp_px"] = t.path.amp_px;
            path["period_frames"] = t.path.period_frames;
            path["phase"] = t.path.phase;
        }
        targets.push_back({{"id", t.id}, {"shape", shape}, {"intensity", t.intensity},
                           {"texture_amp", t.texture_amp}, {"path", path}});
    }
    j["targets"] = targets;
    j["crosstalk"] = {{"enabled", s.crosstalk.enabled},
                      {"lobe_gain", s.crosstalk.lobe_gain},
                      {"lobe_azimuth_offset_px", s.crosstalk.lobe_azimuth_offset_px},
                      {"lobe_aspect", s.crosstalk.lobe_aspect},
                      {"lobe_range_extent_px", s.crosstalk.lobe_range_extent_px}};
    j["dropout_prob"] = s.dropout_prob;
    j["rng_seed"] = s.rng_seed;
    return j.dump(2);
}

SynthScene scene_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw InputError(std::string("scene: malformed JSON: ") + e.what());
    }
    try {
        SynthScene s;
        read_opt(j, "name", s.name);
        if (j.contains("calibration")) {
            const json& c = j.at("calibration");
            read_opt(c, "meters_per_pixel", s.calibration.meters_per_pixel);
            read_opt(c, "fps", s.calibration.fps);
            read_opt(c, "fov_azimuth_deg", s.calibration.fov_azimuth_deg);
            read_opt(c, "fov_elevation_deg", s.calibration.fov_elevation_deg);
            read_opt(c, "range_min_m", s.calibration.range_min_m);
            read_opt(c, "range_max_m", s.calibration.range_max_m);
        }
        read_opt(j, "width", s.width);
        read_opt(j, "height", s.height);
        read_opt(j, "duration_frames", s.duration_frames);
        if (j.contains("background")) {
            const json& b = j.at("background");
            read_opt(b, "speckle_mean", s.speckle_mean);
            read_opt(b, "speckle_std", s.speckle_std);
            if (b.contains("seabed_band") && !b.at("seabed_band").is_null()) {
                const json& sb = b.at("seabed_band");
                s.seabed = SeabedBand{sb.at("range_min_m").get<double>(), sb.at("range_max_m").get<double>(),
                                      sb.at("intensity").get<double>()};
            }
        }
        if (j.contains("targets")) {
            for (const json& jt : j.at("targets")) {
                SynthTarget t;
                read_opt(jt, "id", t.id);
                read_opt(jt, "intensity", t.intensity);
                read_opt(jt, "texture_amp", t.texture_amp);
                const json& sh = jt.at("shape");
                t.shape.kind = parse_shape(sh.at("kind").get<std::string>());
                read_opt(sh, "orientation_deg", t.shape.orientation_deg);
                read_opt(sh, "w", t.shape.w);
                read_opt(sh, "h", t.shape.h);
                read_opt(sh, "len", t.shape.len);
                read_opt(sh, "width", t.shape.width);
                read_opt(sh, "base_radius", t.shape.base_radius);
                read_opt(sh, "deform_amp", t.shape.deform_amp);
                read_opt(sh, "deform_freq", t.shape.deform_freq);
                const json& p = jt.at("path");
                const std::string kind = p.value("kind", "linear");
                if (kind == "linear") t.path.kind = PathKind::linear;
                else if (kind == "sinusoid") t.path.kind = PathKind::sinusoid;
                else throw InputError("scene: unknown path kind '" + kind + "'");
                t.path.start_x = p.at("start_px").at(0).get<double>();
                t.path.start_y = p.at("start_px").at(1).get<double>();
                t.path.velocity_x_mps = p.at("velocity_mps").at(0).get<double>();
                t.path.velocity_y_mps = p.at("velocity_mps").at(1).get<double>();
                read_opt(p, "amp_px", t.path.amp_px);
                read_opt(p, "period_frames", t.path.period_frames);
                read_opt(p, "phase", t.path.phase);
                s.targets.push_back(t);
            }
        }
        if (j.contains("crosstalk")) {
            const json& c = j.at("crosstalk");
            read_opt(c, "enabled", s.crosstalk.enabled);
            read_opt(c, "lobe_gain", s.crosstalk.lobe_gain);
            read_opt(c, "lobe_azimuth_offset_px", s.crosstalk.lobe_azimuth_offset_px);
            read_opt(c, "lobe_aspect", s.crosstalk.lobe_aspect);
            read_opt(c, "lobe_range_extent_px", s.crosstalk.lobe_range_extent_px);
        }
        read_opt(j, "dropout_prob", s.dropout_prob);
        read_opt(j, "rng_seed", s.rng_seed);
        return s;
    } catch (const json::exception& e) {
        throw InputError(std::string("scene: invalid field: ") + e.what());
    }
}

SynthScene load_scene(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("scene file not found: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return scene_from_json(ss.str());
}

}  // namespace sonarflow
