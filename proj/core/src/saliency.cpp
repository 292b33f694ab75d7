#include "sonarflow/saliency.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <mutex>

#include "sonarflow/error.hpp"
#include "sonarflow/filters.hpp"

namespace sonarflow {

void SaliencyConfig::validate() const {
    if (!(roi_quantile > 0.0 && roi_quantile < 1.0))
        throw InputError("--roi-quantile must lie strictly between 0 and 1");
    if (min_blob_area < 1) throw InputError("--min-blob-area must be >= 1");
    if (!(min_mean_intensity >= 0.0 && min_mean_intensity <= 1.0))
        throw InputError("blob min mean intensity must lie in [0, 1]");
}

namespace {

// FFTW planning is not thread-safe; execution of distinct plans is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

struct FftwBuffer {
    explicit FftwBuffer(std::size_t n)
        : data(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n))) {
        if (!data) throw std::bad_alloc();
    }
    ~FftwBuffer() { fftw_free(data); }
    FftwBuffer(const FftwBuffer&) = delete;
    FftwBuffer& operator=(const FftwBuffer&) = delete;
    fftw_complex* data;
};

struct PlanDeleter {
    void operator()(fftw_plan_s* p) const {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(p);
    }
};
using Plan = std::unique_ptr<fftw_plan_s, PlanDeleter>;

Plan make_plan(int width, int height, fftw_complex* buf, int sign) {
    std::lock_guard lock(planner_mutex());
    return Plan(fftw_plan_dft_2d(height, width, buf, buf, sign, FFTW_ESTIMATE));
}

constexpr double kSaliencySigma = 2.5;

}  // namespace

SaliencyMap spectral_residual(const ImageF& image) {
    const int w = image.width();
    const int h = image.height();
    if (w < 8 || h < 8) throw InputError("spectral_residual: image must be at least 8x8");
    const auto [lo, hi] = std::minmax_element(image.pixels().begin(), image.pixels().end());
    if (*lo == *hi) return SaliencyMap(w, h, 0.0);

    const std::size_t n = image.size();
    FftwBuffer buf(n);
    const Plan forward = make_plan(w, h, buf.data, FFTW_FORWARD);
    const Plan backward = make_plan(w, h, buf.data, FFTW_BACKWARD);
    for (std::size_t i = 0; i < n; ++i) {
        buf.data[i][0] = image[i];
        buf.data[i][1] = 0.0;
    }
    fftw_execute(forward.get());

    ImageF amplitude(w, h);
    double max_amp = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        amplitude[i] = std::hypot(buf.data[i][0], buf.data[i][1]);
        max_amp = std::max(max_amp, amplitude[i]);
    }
    // Floor relative to the peak keeps the map invariant to input gain.
    const double floor = max_amp * 1e-12;
    ImageF log_amp(w, h);
    for (std::size_t i = 0; i < n; ++i) log_amp[i] = std::log(amplitude[i] + floor);
    const ImageF smoothed = box_mean(log_amp, 1);

    for (std::size_t i = 0; i < n; ++i) {
        const double residual = log_amp[i] - smoothed[i];
        const double mag = std::exp(residual);
        if (amplitude[i] > 0.0) {
            const double scale = mag / amplitude[i];
            buf.data[i][0] *= scale;
            buf.data[i][1] *= scale;
        } else {
            buf.data[i][0] = mag;
            buf.data[i][1] = 0.0;
        }
    }
    fftw_execute(backward.get());

    ImageF power(w, h);
    for (std::size_t i = 0; i < n; ++i)
        power[i] = buf.data[i][0] * buf.data[i][0] + buf.data[i][1] * buf.data[i][1];
    SaliencyMap sal = gaussian_blur(power, kSaliencySigma);
    const double peak = *std::max_element(sal.pixels().begin(), sal.pixels().end());
    if (!(peak > 0.0)) return SaliencyMap(w, h, 0.0);
    for (double& v : sal.pixels()) v /= peak;
    return sal;
}

double masked_quantile(const ImageF& values, const Mask& mask, double q) {
    std::vector<double> v;
    for (std::size_t i = 0; i < values.size(); ++i)
        if (mask[i]) v.push_back(values[i]);
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return v[lo] + (v[hi] - v[lo]) * frac;
}

std::vector<Blob> extract_blobs(const Mask& mask, const ImageF& intensity, int min_area) {
    if (!mask.same_shape(intensity)) throw InputError("extract_blobs: dimension mismatch");
    const int w = mask.width();
    const int h = mask.height();
    Grid<std::uint8_t> seen(w, h, 0);
    std::vector<Blob> blobs;
    std::vector<PixelCoord> stack;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!mask(x, y) || seen(x, y)) continue;
            Blob blob;
            stack.assign(1, {x, y});
            seen(x, y) = 1;
            while (!stack.empty()) {
                const PixelCoord p = stack.back();
                stack.pop_back();
                blob.pixels.push_back(p);
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int xx = p.x + dx;
                        const int yy = p.y + dy;
                        if (mask.contains(xx, yy) && mask(xx, yy) && !seen(xx, yy)) {
                            seen(xx, yy) = 1;
                            stack.push_back({xx, yy});
                        }
                    }
                }
            }
            blob.area = static_cast<int>(blob.pixels.size());
            if (blob.area < min_area) continue;
            std::sort(blob.pixels.begin(), blob.pixels.end(), [](PixelCoord a, PixelCoord b) {
                return a.y != b.y ? a.y < b.y : a.x < b.x;
            });
            int x0 = w, y0 = h, x1 = -1, y1 = -1;
            double wsum = 0.0, sx = 0.0, sy = 0.0, gx = 0.0, gy = 0.0;
            for (const PixelCoord p : blob.pixels) {
                const double v = intensity(p.x, p.y);
                wsum += v;
                sx += v * p.x;
                sy += v * p.y;
                gx += p.x;
                gy += p.y;
                x0 = std::min(x0, p.x);
                y0 = std::min(y0, p.y);
                x1 = std::max(x1, p.x);
                y1 = std::max(y1, p.y);
            }
            if (wsum > 0.0) {
                blob.cx = sx / wsum;
                blob.cy = sy / wsum;
            } else {
                blob.cx = gx / blob.area;
                blob.cy = gy / blob.area;
            }
            blob.bbox = {x0, y0, x1 - x0 + 1, y1 - y0 + 1};
            blob.mean_intensity = wsum / blob.area;
            blobs.push_back(std::move(blob));
        }
    }
    std::sort(blobs.begin(), blobs.end(), [](const Blob& a, const Blob& b) {
        if (a.area != b.area) return a.area > b.area;
        if (a.cy != b.cy) return a.cy < b.cy;
        return a.cx < b.cx;
    });
    for (std::size_t i = 0; i < blobs.size(); ++i) blobs[i].label = static_cast<int>(i);
    return blobs;
}

RoiResult roi_from_saliency(const SaliencyMap& sal, const Mask& fan, const ImageF& intensity,
                            const SaliencyConfig& cfg) {
    cfg.validate();
    if (!sal.same_shape(fan) || !sal.same_shape(intensity))
        throw InputError("roi_from_saliency: dimension mismatch");
    const double threshold = masked_quantile(sal, fan, cfg.roi_quantile);
    Mask roi(sal.width(), sal.height(), 0);
    for (std::size_t i = 0; i < sal.size(); ++i)
        roi[i] = (fan[i] && sal[i] > 0.0 && sal[i] >= threshold) ? 1 : 0;
    roi = erode3(dilate3(roi));
    roi = dilate3(erode3(roi));
    for (std::size_t i = 0; i < roi.size(); ++i) roi[i] = (roi[i] && fan[i]) ? 1 : 0;

    RoiResult result;
    std::vector<Blob> all = extract_blobs(roi, intensity, cfg.min_blob_area);
    for (Blob& b : all)
        if (b.mean_intensity >= cfg.min_mean_intensity) result.blobs.push_back(std::move(b));
    for (std::size_t i = 0; i < result.blobs.size(); ++i)
        result.blobs[i].label = static_cast<int>(i);
    result.roi = std::move(roi);
    return result;
}

}  // namespace sonarflow
