#include "sonarflow/filters.hpp"

#include <algorithm>
#include <cmath>

#include "sonarflow/error.hpp"

namespace sonarflow {

ImageF box_mean(const ImageF& image, int radius) {
    if (radius < 0) throw InputError("box_mean: radius must be non-negative");
    const int w = image.width();
    const int h = image.height();
    // Integral image with a zero border row/column.
    std::vector<double> sat(static_cast<std::size_t>(w + 1) * (h + 1), 0.0);
    auto at = [&](int x, int y) -> double& { return sat[static_cast<std::size_t>(y) * (w + 1) + x]; };
    for (int y = 0; y < h; ++y) {
        double run = 0.0;
        for (int x = 0; x < w; ++x) {
            run += image(x, y);
            at(x + 1, y + 1) = at(x + 1, y) + run;
        }
    }
    ImageF out(w, h);
    for (int y = 0; y < h; ++y) {
        const int y0 = std::max(0, y - radius);
        const int y1 = std::min(h, y + radius + 1);
        for (int x = 0; x < w; ++x) {
            const int x0 = std::max(0, x - radius);
            const int x1 = std::min(w, x + radius + 1);
            const double sum = at(x1, y1) - at(x0, y1) - at(x1, y0) + at(x0, y0);
            out(x, y) = sum / static_cast<double>((x1 - x0) * (y1 - y0));
        }
    }
    return out;
}

std::vector<double> gaussian_kernel(double sigma, int radius) {
    if (!(sigma > 0.0)) throw InputError("gaussian_kernel: sigma must be > 0");
    std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double v = std::exp(-0.5 * i * i / (sigma * sigma));
        k[static_cast<std::size_t>(i + radius)] = v;
        sum += v;
    }
    for (double& v : k) v /= sum;
    return k;
}

ImageF separable_smooth(const ImageF& image, const std::vector<double>& kernel) {
    const int radius = static_cast<int>(kernel.size() / 2);
    const int w = image.width();
    const int h = image.height();
    ImageF tmp(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            double norm = 0.0;
            for (int k = -radius; k <= radius; ++k) {
                const int xx = x + k;
                if (xx < 0 || xx >= w) continue;
                const double wk = kernel[static_cast<std::size_t>(k + radius)];
                acc += wk * image(xx, y);
                norm += wk;
            }
            tmp(x, y) = acc / norm;
        }
    }
    ImageF out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            double norm = 0.0;
            for (int k = -radius; k <= radius; ++k) {
                const int yy = y + k;
                if (yy < 0 || yy >= h) continue;
                const double wk = kernel[static_cast<std::size_t>(k + radius)];
                acc += wk * tmp(x, yy);
                norm += wk;
            }
            out(x, y) = acc / norm;
        }
    }
    return out;
}

ImageF gaussian_blur(const ImageF& image, double sigma, int radius) {
    if (radius < 0) radius = static_cast<int>(std::ceil(3.0 * sigma));
    return separable_smooth(image, gaussian_kernel(sigma, radius));
}

double sample_bilinear(const ImageF& image, double x, double y) {
    const int w = image.width();
    const int h = image.height();
    x = std::clamp(x, 0.0, static_cast<double>(w - 1));
    y = std::clamp(y, 0.0, static_cast<double>(h - 1));
    const int x0 = std::min(static_cast<int>(x), w - 1);
    const int y0 = std::min(static_cast<int>(y), h - 1);
    const int x1 = std::min(x0 + 1, w - 1);
    const int y1 = std::min(y0 + 1, h - 1);
    const double fx = x - x0;
    const double fy = y - y0;
    const double top = image(x0, y0) * (1.0 - fx) + image(x1, y0) * fx;
    const double bottom = image(x0, y1) * (1.0 - fx) + image(x1, y1) * fx;
    return top * (1.0 - fy) + bottom * fy;
}

ImageF resize_bilinear(const ImageF& image, int width, int height) {
    if (width <= 0 || height <= 0) throw InputError("resize_bilinear: zero target size");
    ImageF out(width, height);
    const double sx = static_cast<double>(image.width()) / width;
    const double sy = static_cast<double>(image.height()) / height;
    for (int y = 0; y < height; ++y) {
        const double srcy = (y + 0.5) * sy - 0.5;
        for (int x = 0; x < width; ++x) {
            const double srcx = (x + 0.5) * sx - 0.5;
            out(x, y) = sample_bilinear(image, srcx, srcy);
        }
    }
    return out;
}

namespace {
Mask morph3(const Mask& mask, bool dilate) {
    const int w = mask.width();
    const int h = mask.height();
    Mask out(w, h, 0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            bool result = !dilate;
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    const int xx = x + dx;
                    const int yy = y + dy;
                    if (!mask.contains(xx, yy)) continue;
                    const bool set = mask(xx, yy) != 0;
                    if (dilate && set) result = true;
                    if (!dilate && !set) result = false;
                }
            }
            out(x, y) = result ? 1 : 0;
        }
    }
    return out;
}
}  // namespace

Mask dilate3(const Mask& mask) { return morph3(mask, true); }
Mask erode3(const Mask& mask) { return morph3(mask, false); }

}  // namespace sonarflow
