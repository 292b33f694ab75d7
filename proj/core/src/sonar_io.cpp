#include "sonarflow/sonar_io.hpp"

#include <openssl/evp.h>
#include <png.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <utility>

#include "json.hpp"
#include "sonarflow/error.hpp"
#include "sonarflow/parallel.hpp"

namespace sonarflow {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kTrackHeader = "frame,target_id,cx_px,cy_px,u_px,v_px,speed_mps";

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Skips whitespace and '#' comments in a PNM header.
void skip_pnm_space(const std::vector<std::uint8_t>& bytes, std::size_t& pos) {
    while (pos < bytes.size()) {
        if (bytes[pos] == '#') {
            while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        } else if (std::isspace(bytes[pos])) {
            ++pos;
        } else {
            break;
        }
    }
}

int read_pnm_int(const std::vector<std::uint8_t>& bytes, std::size_t& pos,
                 const fs::path& path) {
    skip_pnm_space(bytes, pos);
    if (pos >= bytes.size() || !std::isdigit(bytes[pos]))
        throw IoError("malformed PGM header: " + path.string());
    long value = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
        value = value * 10 + (bytes[pos] - '0');
        if (value > (1L << 30)) throw IoError("malformed PGM header: " + path.string());
        ++pos;
    }
    return static_cast<int>(value);
}

Grid<std::uint8_t> decode_pgm(const std::vector<std::uint8_t>& bytes, const fs::path& path) {
    std::size_t pos = 2;
    const int width = read_pnm_int(bytes, pos, path);
    const int height = read_pnm_int(bytes, pos, path);
    const int maxval = read_pnm_int(bytes, pos, path);
    if (width <= 0 || height <= 0) throw IoError("PGM has zero size: " + path.string());
    if (maxval <= 0 || maxval > 255)
        throw IoError("PGM is not 8-bit (maxval " + std::to_string(maxval) + "): " + path.string());
    if (pos >= bytes.size() || !std::isspace(bytes[pos]))
        throw IoError("malformed PGM header: " + path.string());
    ++pos;
    const std::size_t count = static_cast<std::size_t>(width) * height;
    if (bytes.size() - pos < count) throw IoError("truncated PGM data: " + path.string());
    Grid<std::uint8_t> image(width, height);
    std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(pos), count, image.pixels().begin());
    if (maxval != 255) {
        for (auto& px : image.pixels())
            px = static_cast<std::uint8_t>(std::lround(px * 255.0 / maxval));
    }
    return image;
}

Grid<std::uint8_t> decode_png(const fs::path& path) {
    png_image img{};
    img.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&img, path.string().c_str()))
        throw IoError("cannot decode PNG " + path.string() + ": " + img.message);
    if (img.format & PNG_FORMAT_FLAG_COLOR) {
        png_image_free(&img);
        throw IoError("non-grayscale input (color PNG): " + path.string());
    }
    img.format = PNG_FORMAT_GRAY;
    Grid<std::uint8_t> image(static_cast<int>(img.width), static_cast<int>(img.height));
    if (!png_image_finish_read(&img, nullptr, image.pixels().data(), 0, nullptr)) {
        std::string msg = img.message;
        png_image_free(&img);
        throw IoError("cannot decode PNG " + path.string() + ": " + msg);
    }
    return image;
}

double require_number(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key) || !j.at(key).is_number())
        throw IoError("malformed " + where + ": missing numeric field '" + key + "'");
    return j.at(key).get<double>();
}

int require_int(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key) || !j.at(key).is_number_integer())
        throw IoError("malformed " + where + ": missing integer field '" + key + "'");
    return j.at(key).get<int>();
}

json parse_json_file(const fs::path& path, const std::string& what) {
    if (!fs::exists(path)) throw IoError(what + " not found: " + path.string());
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + what + ": " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw IoError("malformed " + what + " (" + path.string() + "): " + e.what());
    }
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write file: " + path.string());
    out << text;
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

void Sequence::validate() const {
    calibration.validate();
    for (std::size_t i = 0; i < frames.size(); ++i) {
        if (!frames[i].intensities.same_shape(frames.front().intensities))
            throw InputError("sequence: frame dimensions differ");
        if (i > 0 && frames[i].index != frames[i - 1].index + 1)
            throw InputError("sequence: frame indices must increase by 1");
    }
}

Grid<std::uint8_t> read_gray8(const fs::path& path) {
    if (!fs::exists(path)) throw IoError("frame file not found: " + path.string());
    const auto bytes = read_bytes(path);
    if (bytes.size() >= 2 && bytes[0] == 'P') {
        if (bytes[1] == '5') return decode_pgm(bytes, path);
        if (bytes[1] == '6' || bytes[1] == '3')
            throw IoError("non-grayscale input (PPM): " + path.string());
        throw IoError("unsupported PNM variant (only binary P5): " + path.string());
    }
    static constexpr std::array<std::uint8_t, 8> kPngMagic{0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    if (bytes.size() >= 8 && std::equal(kPngMagic.begin(), kPngMagic.end(), bytes.begin()))
        return decode_png(path);
    throw IoError("unrecognized image format (expected P5 PGM or PNG): " + path.string());
}

void write_pgm(const fs::path& path, const Grid<std::uint8_t>& image) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write file: " + path.string());
    out << "P5\n" << image.width() << ' ' << image.height() << "\n255\n";
    out.write(reinterpret_cast<const char*>(image.pixels().data()),
              static_cast<std::streamsize>(image.size()));
    if (!out) throw IoError("write failed: " + path.string());
}

namespace {
void write_png_impl(const fs::path& path, int width, int height, png_uint_32 format,
                    const std::uint8_t* data) {
    png_image img{};
    img.version = PNG_IMAGE_VERSION;
    img.width = static_cast<png_uint_32>(width);
    img.height = static_cast<png_uint_32>(height);
    img.format = format;
    if (!png_image_write_to_file(&img, path.string().c_str(), 0, data, 0, nullptr))
        throw IoError("cannot write PNG " + path.string() + ": " + img.message);
}
}  // namespace

void write_png_gray(const fs::path& path, const Grid<std::uint8_t>& image) {
    write_png_impl(path, image.width(), image.height(), PNG_FORMAT_GRAY, image.pixels().data());
}

void write_png_rgb(const fs::path& path, int width, int height,
                   const std::vector<std::uint8_t>& rgb) {
    if (rgb.size() != static_cast<std::size_t>(width) * height * 3)
        throw InputError("write_png_rgb: buffer size does not match dimensions");
    write_png_impl(path, width, height, PNG_FORMAT_RGB, rgb.data());
}

Grid<std::uint8_t> to_gray8(const ImageF& image) {
    Grid<std::uint8_t> out(image.width(), image.height());
    for (std::size_t i = 0; i < image.size(); ++i)
        out[i] = static_cast<std::uint8_t>(std::lround(std::clamp(image[i], 0.0, 1.0) * 255.0));
    return out;
}

ImageF from_gray8(const Grid<std::uint8_t>& image) {
    ImageF out(image.width(), image.height());
    for (std::size_t i = 0; i < image.size(); ++i) out[i] = image[i] / 255.0;
    return out;
}

Manifest read_manifest(const fs::path& manifest_path) {
    const json j = parse_json_file(manifest_path, "manifest");
    const std::string where = "manifest " + manifest_path.string();
    if (!j.is_object()) throw IoError("malformed " + where + ": expected an object");
    Manifest m;
    m.version = require_int(j, "version", where);
    if (m.version != 1)
        throw IoError("malformed " + where + ": unsupported version " + std::to_string(m.version));
    m.calibration.fps = require_number(j, "fps", where);
    m.calibration.meters_per_pixel = require_number(j, "meters_per_pixel", where);
    m.calibration.fov_azimuth_deg = require_number(j, "fov_azimuth_deg", where);
    m.calibration.range_min_m = require_number(j, "range_min_m", where);
    m.calibration.range_max_m = require_number(j, "range_max_m", where);
    if (j.contains("fov_elevation_deg") && j.at("fov_elevation_deg").is_number())
        m.calibration.fov_elevation_deg = j.at("fov_elevation_deg").get<double>();
    if (!j.contains("frames") || !j.at("frames").is_array())
        throw IoError("malformed " + where + ": missing 'frames' array");
    for (const auto& f : j.at("frames")) {
        if (!f.is_string()) throw IoError("malformed " + where + ": frame entries must be strings");
        m.frames.push_back(f.get<std::string>());
    }
    try {
        m.calibration.validate();
    } catch (const InputError& e) {
        throw IoError("malformed " + where + ": " + e.what());
    }
    return m;
}

void write_manifest(const fs::path& manifest_path, const Manifest& m) {
    json j;
    j["version"] = m.version;
    j["fps"] = m.calibration.fps;
    j["meters_per_pixel"] = m.calibration.meters_per_pixel;
    j["fov_azimuth_deg"] = m.calibration.fov_azimuth_deg;
    j["fov_elevation_deg"] = m.calibration.fov_elevation_deg;
    j["range_min_m"] = m.calibration.range_min_m;
    j["range_max_m"] = m.calibration.range_max_m;
    j["frames"] = m.frames;
    write_text(manifest_path, j.dump(2) + "\n");
}

fs::path resolve_manifest_path(const fs::path& input) {
    if (fs::is_directory(input)) return input / "manifest.json";
    return input;
}

Sequence load_sequence(const fs::path& manifest_path, unsigned threads) {
    const Manifest m = read_manifest(manifest_path);
    const fs::path base = manifest_path.parent_path();
    Sequence seq;
    seq.calibration = m.calibration;
    seq.frames.resize(m.frames.size());
    parallel_for(m.frames.size(), threads, [&](std::size_t i) {
        const auto raw = read_gray8(base / m.frames[i]);
        Frame& f = seq.frames[i];
        f.intensities = from_gray8(raw);
        f.index = static_cast<int>(i);
        f.timestamp_s = static_cast<double>(i) / m.calibration.fps;
    });
    for (const Frame& f : seq.frames) {
        if (!f.intensities.same_shape(seq.frames.front().intensities)) {
            throw IoError("dimension mismatch across frames in " + manifest_path.string() + ": " +
                          std::to_string(seq.frames.front().width()) + "x" +
                          std::to_string(seq.frames.front().height()) + " vs " +
                          std::to_string(f.width()) + "x" + std::to_string(f.height()) +
                          " at frame " + std::to_string(f.index));
        }
    }
    return seq;
}

fs::path save_sequence(const Sequence& seq, const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
    Manifest m;
    m.calibration = seq.calibration;
    for (std::size_t i = 0; i < seq.frames.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "frame_%04zu.pgm", i);
        write_pgm(dir / name, to_gray8(seq.frames[i].intensities));
        m.frames.emplace_back(name);
    }
    const fs::path manifest_path = dir / "manifest.json";
    write_manifest(manifest_path, m);
    return manifest_path;
}

std::vector<GtBox> load_gt(const fs::path& path, std::optional<ImageSize> bounds) {
    const json j = parse_json_file(path, "ground-truth file");
    const std::string where = "ground-truth file " + path.string();
    if (!j.is_object() || require_int(j, "version", where) != 1)
        throw IoError("malformed " + where + ": expected version 1 object");
    if (!j.contains("boxes") || !j.at("boxes").is_array())
        throw IoError("malformed " + where + ": missing 'boxes' array");
    std::vector<GtBox> boxes;
    for (const auto& b : j.at("boxes")) {
        GtBox box;
        box.frame_index = require_int(b, "frame", where);
        box.target_id = require_int(b, "id", where);
        box.cx = require_number(b, "cx", where);
        box.cy = require_number(b, "cy", where);
        box.w = require_number(b, "w", where);
        box.h = require_number(b, "h", where);
        if (!(box.w > 0.0) || !(box.h > 0.0))
            throw InputError(where + ": box with non-positive size at frame " +
                             std::to_string(box.frame_index));
        if (bounds) {
            // Pixel centers sit on integers, so the raster spans [-0.5, size - 0.5].
            const double eps = 1e-9;
            if (box.cx - box.w / 2 < -0.5 - eps || box.cy - box.h / 2 < -0.5 - eps ||
                box.cx + box.w / 2 > bounds->width - 0.5 + eps ||
                box.cy + box.h / 2 > bounds->height - 0.5 + eps) {
                throw InputError(where + ": out-of-bounds box for id " +
                                 std::to_string(box.target_id) + " at frame " +
                                 std::to_string(box.frame_index));
            }
        }
        boxes.push_back(box);
    }
    std::sort(boxes.begin(), boxes.end(), [](const GtBox& a, const GtBox& b) {
        return std::pair(a.target_id, a.frame_index) < std::pair(b.target_id, b.frame_index);
    });
    for (std::size_t i = 1; i < boxes.size(); ++i) {
        if (boxes[i].target_id == boxes[i - 1].target_id &&
            boxes[i].frame_index == boxes[i - 1].frame_index) {
            throw InputError(where + ": duplicate box for (frame " +
                             std::to_string(boxes[i].frame_index) + ", id " +
                             std::to_string(boxes[i].target_id) + ")");
        }
    }
    return boxes;
}

void save_gt(const fs::path& path, const std::vector<GtBox>& boxes) {
    json arr = json::array();
    for (const GtBox& b : boxes) {
        arr.push_back({{"frame", b.frame_index}, {"id", b.target_id}, {"cx", b.cx},
                       {"cy", b.cy}, {"w", b.w}, {"h", b.h}});
    }
    json j;
    j["version"] = 1;
    j["boxes"] = std::move(arr);
    write_text(path, j.dump(2) + "\n");
}

void write_tracks(const std::vector<TrackRecord>& tracks, const fs::path& path) {
    std::string text = kTrackHeader;
    text += '\n';
    char line[256];
    for (const TrackRecord& r : tracks) {
        std::snprintf(line, sizeof line, "%d,%d,%.6f,%.6f,%.6f,%.6f,%.6f\n", r.frame_index,
                      r.target_id, r.cx, r.cy, r.u, r.v, r.speed_mps);
        text += line;
    }
    write_text(path, text);
}

std::vector<TrackRecord> read_tracks(const fs::path& path) {
    if (!fs::exists(path)) throw IoError("tracks file not found: " + path.string());
    std::ifstream in(path);
    if (!in) throw IoError("cannot open tracks file: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty tracks file: " + path.string());
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kTrackHeader) throw IoError("malformed tracks header in " + path.string());
    std::vector<TrackRecord> out;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        TrackRecord r;
        char tail = 0;
        const int n = std::sscanf(line.c_str(), "%d,%d,%lf,%lf,%lf,%lf,%lf%c", &r.frame_index,
                                  &r.target_id, &r.cx, &r.cy, &r.u, &r.v, &r.speed_mps, &tail);
        if (n != 7)
            throw IoError("malformed row " + std::to_string(line_no) + " in " + path.string());
        out.push_back(r);
    }
    return out;
}

std::string sha256_file(const fs::path& path) {
    const auto bytes = read_bytes(path);
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    if (!EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr))
        throw IoError("sha256 failed for " + path.string());
    std::ostringstream hex;
    for (unsigned i = 0; i < len; ++i)
        hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
    return hex.str();
}

}  // namespace sonarflow
