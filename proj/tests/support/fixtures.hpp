#pragma once

#include <atomic>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>

#include "sonarflow/filters.hpp"
#include "sonarflow/image.hpp"

namespace fixture {

/// Temporary directory removed on destruction.
class ScratchDir {
public:
    explicit ScratchDir(const std::string& tag) {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("sonarflow-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~ScratchDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    ScratchDir(const ScratchDir&) = delete;
    ScratchDir& operator=(const ScratchDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline sonarflow::ImageF random_image(int w, int h, unsigned seed, double lo = 0.0, double hi = 1.0) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> d(lo, hi);
    sonarflow::ImageF img(w, h);
    for (std::size_t i = 0; i < img.size(); ++i) img[i] = d(rng);
    return img;
}

/// Gaussian-smoothed uniform noise rescaled to [0, 1].
inline sonarflow::ImageF smooth_noise(int w, int h, unsigned seed, double sigma = 2.0) {
    sonarflow::ImageF img = sonarflow::gaussian_blur(random_image(w, h, seed), sigma);
    double lo = 1e300, hi = -1e300;
    for (double v : img.pixels()) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    for (double& v : img.pixels()) v = (v - lo) / (hi - lo);
    return img;
}

/// Window [x0, x0 + w) x [y0, y0 + h) of `src`.
inline sonarflow::ImageF crop(const sonarflow::ImageF& src, int x0, int y0, int w, int h) {
    sonarflow::ImageF out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) out(x, y) = src(x0 + x, y0 + y);
    return out;
}

}  // namespace fixture
