#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "sonarflow/flow.hpp"
#include "sonarflow/sonar_io.hpp"
#include "sonarflow/tracking.hpp"

namespace sonarflow {

using Rgb = std::array<std::uint8_t, 3>;

struct OverlayStyle {
    /// Track id i is drawn in palette[i mod palette.size()].
    std::vector<Rgb> palette = {{0, 220, 0},   {255, 64, 64},  {64, 160, 255}, {255, 200, 0},
                                {220, 0, 220}, {0, 220, 220}, {255, 128, 0},  {160, 255, 160}};
    Rgb gt_color = {255, 255, 255};
    Rgb flow_color = {255, 220, 0};
    int point_radius = 1;
    int vector_stride = 8;
    double vector_scale = 2.0;

    Rgb color_for(int track_id) const;
};

struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;  ///< interleaved RGB

    RgbImage() = default;
    RgbImage(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, 0) {}

    Rgb at(int x, int y) const;
    void set(int x, int y, const Rgb& c);  ///< silently clips
};

RgbImage gray_to_rgb(const ImageF& image);
/// Bresenham line between rounded endpoints.
void draw_line(RgbImage& img, double x0, double y0, double x1, double y1, const Rgb& c);
void draw_disc(RgbImage& img, double cx, double cy, int radius, const Rgb& c);

/// Overlay of one frame: GT path (non-negative ids) and every track's path up
/// to `frame_index`, with the track centers drawn last.
RgbImage overlay_frame(const Frame& frame, const std::vector<Track>& tracks,
                       const std::vector<GtBox>* gt, const OverlayStyle& style);

/// Writes overlay_NNNN.png per frame; returns the written paths in frame order.
std::vector<std::filesystem::path> render_overlay(const Sequence& seq, const std::vector<Track>& tracks,
                                                  const std::optional<std::vector<GtBox>>& gt,
                                                  const std::filesystem::path& out_dir,
                                                  const OverlayStyle& style = {}, unsigned threads = 1);

/// Quiver raster: one segment per valid grid point, length = magnitude * scale.
RgbImage flow_quiver(const FlowField& flow, const OverlayStyle& style,
                     const ImageF* background = nullptr);
void render_flow(const FlowField& flow, const std::filesystem::path& out_path,
                 const OverlayStyle& style = {}, const ImageF* background = nullptr);

/// Saliency, ROI and conditioned-frame snapshots for one pipeline stage.
void render_stage(const FrameStage& stage, const std::filesystem::path& out_dir, int frame_index);

}  // namespace sonarflow
