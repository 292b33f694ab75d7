#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sonarflow/geometry.hpp"
#include "sonarflow/image.hpp"

namespace sonarflow {

/// One grayscale sonar frame. Intensities are normalized reflectance in [0, 1].
struct Frame {
    ImageF intensities;
    int index = 0;
    double timestamp_s = 0.0;

    int width() const { return intensities.width(); }
    int height() const { return intensities.height(); }
};

struct Sequence {
    std::vector<Frame> frames;
    ImageCalibration calibration;

    int width() const { return frames.empty() ? 0 : frames.front().width(); }
    int height() const { return frames.empty() ? 0 : frames.front().height(); }
    std::size_t size() const { return frames.size(); }

    /// Checks shared dimensions, consecutive indices, and calibration.
    void validate() const;
};

/// Ground-truth box in pixel coordinates. Negative ids mark crosstalk lobes.
struct GtBox {
    int frame_index = 0;
    int target_id = 0;
    double cx = 0.0;
    double cy = 0.0;
    double w = 0.0;
    double h = 0.0;
};

struct TrackRecord {
    int frame_index = 0;
    int target_id = 0;
    double cx = 0.0;
    double cy = 0.0;
    double u = 0.0;
    double v = 0.0;
    double speed_mps = 0.0;
};

struct ImageSize {
    int width = 0;
    int height = 0;
};

/// Parsed sequence manifest; frame paths are relative to the manifest's directory.
struct Manifest {
    int version = 1;
    ImageCalibration calibration;
    std::vector<std::string> frames;
};

// 8-bit raster codecs. Readers dispatch on magic bytes (P5 PGM or PNG).
Grid<std::uint8_t> read_gray8(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const Grid<std::uint8_t>& image);
void write_png_gray(const std::filesystem::path& path, const Grid<std::uint8_t>& image);
/// `rgb` holds width*height*3 interleaved bytes.
void write_png_rgb(const std::filesystem::path& path, int width, int height,
                   const std::vector<std::uint8_t>& rgb);

Grid<std::uint8_t> to_gray8(const ImageF& image);
ImageF from_gray8(const Grid<std::uint8_t>& image);

Manifest read_manifest(const std::filesystem::path& manifest_path);
void write_manifest(const std::filesystem::path& manifest_path, const Manifest& manifest);

/// Resolves a --input argument: a manifest file, or a directory holding manifest.json.
std::filesystem::path resolve_manifest_path(const std::filesystem::path& input);

/// Loads frames in manifest order, normalizing 8-bit values by 1/255.
Sequence load_sequence(const std::filesystem::path& manifest_path, unsigned threads = 1);

/// Writes frames as PGM files frame_NNNN.pgm plus manifest.json into dir.
/// Returns the manifest path.
std::filesystem::path save_sequence(const Sequence& seq, const std::filesystem::path& dir);

/// Records come back sorted by (target_id, frame_index). With `bounds`, every
/// box must lie fully inside the image.
std::vector<GtBox> load_gt(const std::filesystem::path& path,
                           std::optional<ImageSize> bounds = std::nullopt);
void save_gt(const std::filesystem::path& path, const std::vector<GtBox>& boxes);

/// CSV with header frame,target_id,cx_px,cy_px,u_px,v_px,speed_mps.
void write_tracks(const std::vector<TrackRecord>& tracks, const std::filesystem::path& path);
std::vector<TrackRecord> read_tracks(const std::filesystem::path& path);

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace sonarflow
