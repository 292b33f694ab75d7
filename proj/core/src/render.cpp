#include "sonarflow/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "sonarflow/error.hpp"
#include "sonarflow/parallel.hpp"

namespace sonarflow {

namespace fs = std::filesystem;

namespace {

int round_px(double v) { return static_cast<int>(std::lround(v)); }

fs::path numbered(const fs::path& dir, const char* prefix, int index) {
    char name[64];
    std::snprintf(name, sizeof name, "%s_%04d.png", prefix, index);
    return dir / name;
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

}  // namespace

Rgb OverlayStyle::color_for(int track_id) const {
    if (palette.empty()) return {0, 255, 0};
    const auto n = static_cast<int>(palette.size());
    return palette[static_cast<std::size_t>(((track_id % n) + n) % n)];
}

Rgb RgbImage::at(int x, int y) const {
    const std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
    return {data[i], data[i + 1], data[i + 2]};
}

void RgbImage::set(int x, int y, const Rgb& c) {
    if (x < 0 || y < 0 || x >= width || y >= height) return;
    const std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
    data[i] = c[0];
    data[i + 1] = c[1];
    data[i + 2] = c[2];
}

RgbImage gray_to_rgb(const ImageF& image) {
    const auto g = to_gray8(image);
    RgbImage out(image.width(), image.height());
    for (std::size_t i = 0; i < g.size(); ++i)
        out.data[3 * i] = out.data[3 * i + 1] = out.data[3 * i + 2] = g[i];
    return out;
}

void draw_line(RgbImage& img, double fx0, double fy0, double fx1, double fy1, const Rgb& c) {
    int x0 = round_px(fx0), y0 = round_px(fy0);
    const int x1 = round_px(fx1), y1 = round_px(fy1);
    const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
    const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    for (;;) {
        img.set(x0, y0, c);
        if (x0 == x1 && y0 == y1) break;
        const int e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            x0 += sx;
        }
        if (e2 <= dx) {
            err += dx;
            y0 += sy;
        }
    }
}

void draw_disc(RgbImage& img, double cx, double cy, int radius, const Rgb& c) {
    const int x = round_px(cx), y = round_px(cy);
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx)
            if (dx * dx + dy * dy <= radius * radius) img.set(x + dx, y + dy, c);
}

RgbImage overlay_frame(const Frame& frame, const std::vector<Track>& tracks,
                       const std::vector<GtBox>* gt, const OverlayStyle& style) {
    RgbImage img = gray_to_rgb(frame.intensities);
    const int f = frame.index;
    if (gt != nullptr) {
        const GtBox* prev = nullptr;
        for (const GtBox& b : *gt) {
            if (b.target_id < 0 || b.frame_index > f) continue;
            if (prev != nullptr && prev->target_id == b.target_id)
                draw_line(img, prev->cx, prev->cy, b.cx, b.cy, style.gt_color);
            prev = &b;
        }
    }
    for (const Track& t : tracks) {
        const Rgb c = style.color_for(t.target_id);
        const TrackPoint* prev = nullptr;
        for (const TrackPoint& p : t.points) {
            if (p.frame_index > f) break;
            if (prev != nullptr) draw_line(img, prev->cx, prev->cy, p.cx, p.cy, c);
            prev = &p;
        }
    }
    for (const Track& t : tracks) {
        const Rgb c = style.color_for(t.target_id);
        for (const TrackPoint& p : t.points) {
            if (p.frame_index > f) break;
            draw_disc(img, p.cx, p.cy, p.frame_index == f ? style.point_radius + 1 : style.point_radius, c);
        }
    }
    return img;
}

std::vector<fs::path> render_overlay(const Sequence& seq, const std::vector<Track>& tracks,
                                     const std::optional<std::vector<GtBox>>& gt, const fs::path& out_dir,
                                     const OverlayStyle& style, unsigned threads) {
    for (const Track& t : tracks)
        for (const TrackPoint& p : t.points)
            if (p.frame_index < 0 || p.frame_index >= static_cast<int>(seq.size()))
                throw InputError("render: track " + std::to_string(t.target_id) + " references frame " +
                                 std::to_string(p.frame_index) + " outside the sequence");
    ensure_dir(out_dir);
    std::vector<GtBox> sorted_gt;
    if (gt) {
        sorted_gt = *gt;
        std::sort(sorted_gt.begin(), sorted_gt.end(), [](const GtBox& a, const GtBox& b) {
            return std::pair(a.target_id, a.frame_index) < std::pair(b.target_id, b.frame_index);
        });
    }
    std::vector<fs::path> paths(seq.size());
    parallel_for(seq.size(), threads, [&](std::size_t i) {
        const Frame& frame = seq.frames[i];
        const RgbImage img = overlay_frame(frame, tracks, gt ? &sorted_gt : nullptr, style);
        paths[i] = numbered(out_dir, "overlay", frame.index);
        write_png_rgb(paths[i], img.width, img.height, img.data);
    });
    return paths;
}

RgbImage flow_quiver(const FlowField& flow, const OverlayStyle& style, const ImageF* background) {
    if (style.vector_stride < 1) throw InputError("render: vector stride must be >= 1");
    RgbImage img = background != nullptr ? gray_to_rgb(*background) : RgbImage(flow.width(), flow.height());
    if (img.width != flow.width() || img.height != flow.height())
        throw InputError("render: background and flow sizes differ");
    const int s = style.vector_stride;
    for (int y = s / 2; y < flow.height(); y += s) {
        for (int x = s / 2; x < flow.width(); x += s) {
            if (!flow.valid(x, y)) continue;
            const double u = flow.u(x, y), v = flow.v(x, y);
            if (u == 0.0 && v == 0.0) continue;
            draw_line(img, x, y, x + u * style.vector_scale, y + v * style.vector_scale, style.flow_color);
        }
    }
    return img;
}

void render_flow(const FlowField& flow, const fs::path& out_path, const OverlayStyle& style,
                 const ImageF* background) {
    const RgbImage img = flow_quiver(flow, style, background);
    write_png_rgb(out_path, img.width, img.height, img.data);
}

void render_stage(const FrameStage& stage, const fs::path& out_dir, int frame_index) {
    ensure_dir(out_dir);
    write_png_gray(numbered(out_dir, "saliency", frame_index), to_gray8(stage.saliency));
    Grid<std::uint8_t> roi(stage.roi.width(), stage.roi.height());
    for (std::size_t i = 0; i < roi.size(); ++i) roi[i] = stage.roi[i] ? 255 : 0;
    write_png_gray(numbered(out_dir, "roi", frame_index), roi);
    write_png_gray(numbered(out_dir, "conditioned", frame_index), to_gray8(stage.conditioned.intensities));
}

}  // namespace sonarflow
