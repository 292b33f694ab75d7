#include "sonarflow/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <string>
#include <vector>

#include "sonarflow/error.hpp"
#include "sonarflow/filters.hpp"

namespace sonarflow {

std::string_view to_string(InpaintMethod m) {
    switch (m) {
        case InpaintMethod::telea: return "telea";
        case InpaintMethod::biharmonic: return "biharmonic";
    }
    return "unknown";
}

std::optional<InpaintMethod> parse_inpaint_method(std::string_view name) {
    if (name == "telea") return InpaintMethod::telea;
    if (name == "biharmonic") return InpaintMethod::biharmonic;
    if (name == "none") return std::nullopt;
    throw InputError("unknown inpaint method '" + std::string(name) +
                     "' (expected telea, biharmonic or none)");
}

void PreprocessConfig::validate() const {
    if (bg_frames < 0) throw InputError("--bg-frames must be >= 0 (0 = auto)");
    if (!(hole_thresh >= 0.0 && hole_thresh <= 1.0))
        throw InputError("--hole-thresh must lie in [0, 1]");
    if (inpaint_radius < 1) throw InputError("inpaint radius must be >= 1");
    if (gf_radius < 1) throw InputError("--gf-radius must be >= 1");
    if (!(gf_eps > 0.0)) throw InputError("--gf-eps must be > 0");
}

BackgroundModel build_background(const Sequence& seq, int n) {
    if (seq.frames.empty()) throw InputError("build_background: empty sequence");
    if (n < 1 || static_cast<std::size_t>(n) > seq.frames.size())
        throw InputError("build_background: n must lie in [1, frame count]");
    const int w = seq.width();
    const int h = seq.height();
    BackgroundModel model{ImageF(w, h), n};
    std::vector<double> samples(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < model.background.size(); ++i) {
        for (int k = 0; k < n; ++k) samples[static_cast<std::size_t>(k)] = seq.frames[static_cast<std::size_t>(k)].intensities[i];
        std::sort(samples.begin(), samples.end());
        const std::size_t mid = samples.size() / 2;
        model.background[i] =
            (samples.size() % 2 == 1) ? samples[mid] : 0.5 * (samples[mid - 1] + samples[mid]);
    }
    return model;
}

Frame subtract_background(const Frame& frame, const BackgroundModel& bg) {
    if (!frame.intensities.same_shape(bg.background))
        throw InputError("subtract_background: dimension mismatch");
    Frame out = frame;
    for (std::size_t i = 0; i < out.intensities.size(); ++i)
        out.intensities[i] = std::clamp(frame.intensities[i] - bg.background[i], 0.0, 1.0);
    return out;
}

HoleMask detect_holes(const Frame& frame, const Mask& roi, double low_thresh) {
    if (!(low_thresh >= 0.0 && low_thresh <= 1.0))
        throw InputError("detect_holes: threshold must lie in [0, 1]");
    const ImageF& img = frame.intensities;
    if (!img.same_shape(roi)) throw InputError("detect_holes: dimension mismatch");
    const int w = img.width();
    const int h = img.height();
    HoleMask candidates(w, h, 0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            candidates(x, y) = (roi(x, y) && img(x, y) < low_thresh) ? 1 : 0;

    static constexpr int kDx[4] = {1, -1, 0, 0};
    static constexpr int kDy[4] = {0, 0, 1, -1};
    auto on_roi_border = [&](int x, int y) {
        for (int k = 0; k < 4; ++k) {
            const int xx = x + kDx[k];
            const int yy = y + kDy[k];
            if (!roi.contains(xx, yy) || !roi(xx, yy)) return true;
        }
        return false;
    };

    HoleMask holes(w, h, 0);
    Grid<std::uint8_t> seen(w, h, 0);
    std::vector<std::pair<int, int>> component;
    std::vector<std::pair<int, int>> stack;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!candidates(x, y) || seen(x, y)) continue;
            component.clear();
            stack.assign(1, {x, y});
            seen(x, y) = 1;
            bool touches_border = false;
            while (!stack.empty()) {
                const auto [cx, cy] = stack.back();
                stack.pop_back();
                component.emplace_back(cx, cy);
                touches_border = touches_border || on_roi_border(cx, cy);
                for (int k = 0; k < 4; ++k) {
                    const int xx = cx + kDx[k];
                    const int yy = cy + kDy[k];
                    if (candidates.contains(xx, yy) && candidates(xx, yy) && !seen(xx, yy)) {
                        seen(xx, yy) = 1;
                        stack.emplace_back(xx, yy);
                    }
                }
            }
            if (touches_border) continue;
            for (const auto& [cx, cy] : component) holes(cx, cy) = 1;
        }
    }
    return holes;
}

namespace {

enum : std::uint8_t { kKnown = 0, kBand = 1, kInside = 2 };

constexpr double kFar = 1e6;

struct HeapEntry {
    double t;
    int x;
    int y;
    bool operator>(const HeapEntry& o) const {
        if (t != o.t) return t > o.t;
        if (y != o.y) return y > o.y;
        return x > o.x;
    }
};

double solve_eikonal(const Grid<std::uint8_t>& flag, const ImageF& dist, int x1, int y1, int x2,
                     int y2) {
    const bool k1 = flag.contains(x1, y1) && flag(x1, y1) != kInside;
    const bool k2 = flag.contains(x2, y2) && flag(x2, y2) != kInside;
    if (k1 && k2) {
        const double t1 = dist(x1, y1);
        const double t2 = dist(x2, y2);
        const double disc = 2.0 - (t1 - t2) * (t1 - t2);
        if (disc >= 0.0) {
            const double r = std::sqrt(disc);
            double s = (t1 + t2 - r) * 0.5;
            if (s >= t1 && s >= t2) return s;
            s += r;
            if (s >= t1 && s >= t2) return s;
        }
        return 1.0 + std::min(t1, t2);
    }
    if (k1) return 1.0 + dist(x1, y1);
    if (k2) return 1.0 + dist(x2, y2);
    return kFar;
}

// Central difference of `f` along one axis using only pixels not flagged inside.
template <typename Get>
double masked_diff(const Grid<std::uint8_t>& flag, int x, int y, int dx, int dy, Get get) {
    const bool fwd = flag.contains(x + dx, y + dy) && flag(x + dx, y + dy) != kInside;
    const bool bwd = flag.contains(x - dx, y - dy) && flag(x - dx, y - dy) != kInside;
    if (fwd && bwd) return 0.5 * (get(x + dx, y + dy) - get(x - dx, y - dy));
    if (fwd) return get(x + dx, y + dy) - get(x, y);
    if (bwd) return get(x, y) - get(x - dx, y - dy);
    return 0.0;
}

void telea_fill(ImageF& img, const HoleMask& holes, int radius) {
    const int w = img.width();
    const int h = img.height();
    Grid<std::uint8_t> flag(w, h, kKnown);
    ImageF dist(w, h, 0.0);
    std::priority_queue<HeapEntry, std::vector<HeapEntry>, std::greater<>> heap;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (holes(x, y)) {
                flag(x, y) = kInside;
                dist(x, y) = kFar;
            }
        }
    }
    static constexpr int kDx[4] = {1, -1, 0, 0};
    static constexpr int kDy[4] = {0, 0, 1, -1};
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (flag(x, y) != kKnown) continue;
            for (int k = 0; k < 4; ++k) {
                const int xx = x + kDx[k];
                const int yy = y + kDy[k];
                if (flag.contains(xx, yy) && flag(xx, yy) == kInside) {
                    flag(x, y) = kBand;
                    heap.push({0.0, x, y});
                    break;
                }
            }
        }
    }

    const double r2 = static_cast<double>(radius) * radius;
    auto fill_pixel = [&](int px, int py) {
        auto dist_at = [&](int x, int y) { return dist(x, y); };
        auto img_at = [&](int x, int y) { return img(x, y); };
        const double gtx = masked_diff(flag, px, py, 1, 0, dist_at);
        const double gty = masked_diff(flag, px, py, 0, 1, dist_at);
        double weight_sum = 0.0;
        double acc = 0.0;
        for (int qy = py - radius; qy <= py + radius; ++qy) {
            for (int qx = px - radius; qx <= px + radius; ++qx) {
                if (!flag.contains(qx, qy) || flag(qx, qy) == kInside) continue;
                const double rx = px - qx;
                const double ry = py - qy;
                const double len2 = rx * rx + ry * ry;
                if (len2 == 0.0 || len2 > r2) continue;
                const double len = std::sqrt(len2);
                double dir = std::abs(rx * gtx + ry * gty) / len;
                if (dir <= 0.01) dir = 1e-6;
                const double dst = 1.0 / len2;
                const double lev = 1.0 / (1.0 + std::abs(dist(qx, qy) - dist(px, py)));
                const double wgt = dir * dst * lev;
                const double gix = masked_diff(flag, qx, qy, 1, 0, img_at);
                const double giy = masked_diff(flag, qx, qy, 0, 1, img_at);
                acc += wgt * (img(qx, qy) + gix * rx + giy * ry);
                weight_sum += wgt;
            }
        }
        if (weight_sum > 0.0) img(px, py) = std::clamp(acc / weight_sum, 0.0, 1.0);
    };

    while (!heap.empty()) {
        const HeapEntry top = heap.top();
        heap.pop();
        if (flag(top.x, top.y) == kKnown) continue;
        flag(top.x, top.y) = kKnown;
        for (int k = 0; k < 4; ++k) {
            const int nx = top.x + kDx[k];
            const int ny = top.y + kDy[k];
            if (!flag.contains(nx, ny) || flag(nx, ny) != kInside) continue;
            const double t = std::min({solve_eikonal(flag, dist, nx - 1, ny, nx, ny - 1),
                                       solve_eikonal(flag, dist, nx + 1, ny, nx, ny - 1),
                                       solve_eikonal(flag, dist, nx - 1, ny, nx, ny + 1),
                                       solve_eikonal(flag, dist, nx + 1, ny, nx, ny + 1)});
            dist(nx, ny) = t;
            fill_pixel(nx, ny);
            flag(nx, ny) = kBand;
            heap.push({t, nx, ny});
        }
    }
}

// Onion-peel initialization: each hole pixel takes the mean of already
// known 8-neighbors, peeling inward ring by ring.
void peel_fill(ImageF& img, const HoleMask& holes) {
    const int w = img.width();
    const int h = img.height();
    Mask unknown = holes;
    std::vector<std::pair<int, int>> ring;
    for (;;) {
        ring.clear();
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                if (!unknown(x, y)) continue;
                bool has_known = false;
                for (int dy = -1; dy <= 1 && !has_known; ++dy)
                    for (int dx = -1; dx <= 1; ++dx)
                        if (unknown.contains(x + dx, y + dy) && !unknown(x + dx, y + dy)) {
                            has_known = true;
                            break;
                        }
                if (has_known) ring.emplace_back(x, y);
            }
        }
        if (ring.empty()) break;
        std::vector<double> values;
        values.reserve(ring.size());
        for (const auto& [x, y] : ring) {
            double sum = 0.0;
            int n = 0;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx)
                    if (unknown.contains(x + dx, y + dy) && !unknown(x + dx, y + dy)) {
                        sum += img(x + dx, y + dy);
                        ++n;
                    }
            values.push_back(sum / n);
        }
        for (std::size_t i = 0; i < ring.size(); ++i) {
            img(ring[i].first, ring[i].second) = values[i];
            unknown(ring[i].first, ring[i].second) = 0;
        }
    }
}

void biharmonic_fill(ImageF& img, const HoleMask& holes) {
    peel_fill(img, holes);
    const int w = img.width();
    const int h = img.height();
    std::vector<std::pair<int, int>> unknowns;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (holes(x, y)) unknowns.emplace_back(x, y);

    auto at = [&](int x, int y) {
        return img(std::clamp(x, 0, w - 1), std::clamp(y, 0, h - 1));
    };
    constexpr double kOmega = 1.6;
    constexpr double kTol = 1e-6;
    constexpr int kMaxSweeps = 200000;
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        double max_update = 0.0;
        for (const auto& [x, y] : unknowns) {
            const double n4 = at(x + 1, y) + at(x - 1, y) + at(x, y + 1) + at(x, y - 1);
            const double diag =
                at(x + 1, y + 1) + at(x - 1, y + 1) + at(x + 1, y - 1) + at(x - 1, y - 1);
            const double far = at(x + 2, y) + at(x - 2, y) + at(x, y + 2) + at(x, y - 2);
            const double target = (8.0 * n4 - 2.0 * diag - far) / 20.0;
            const double update = kOmega * (target - img(x, y));
            img(x, y) += update;
            max_update = std::max(max_update, std::abs(update));
        }
        if (max_update < kTol) break;
    }
}

}  // namespace

Frame inpaint(const Frame& frame, const HoleMask& holes, InpaintMethod method, int radius) {
    if (!frame.intensities.same_shape(holes)) throw InputError("inpaint: dimension mismatch");
    if (radius < 1) throw InputError("inpaint: radius must be >= 1");
    std::size_t hole_count = 0;
    for (auto v : holes.pixels()) hole_count += v ? 1 : 0;
    Frame out = frame;
    if (hole_count == 0) return out;
    if (hole_count == holes.size())
        throw InputError("inpaint: hole mask covers the entire image, no boundary data");
    switch (method) {
        case InpaintMethod::telea: telea_fill(out.intensities, holes, radius); break;
        case InpaintMethod::biharmonic: biharmonic_fill(out.intensities, holes); break;
    }
    // Only hole pixels may change.
    for (std::size_t i = 0; i < holes.size(); ++i)
        if (!holes[i]) out.intensities[i] = frame.intensities[i];
    return out;
}

ImageF guided_filter(const ImageF& input, const ImageF& guide, int radius, double epsilon) {
    if (!input.same_shape(guide)) throw InputError("guided_filter: dimension mismatch");
    if (radius < 1) throw InputError("guided_filter: radius must be >= 1");
    if (!(epsilon > 0.0)) throw InputError("guided_filter: epsilon must be > 0");
    const std::size_t n = input.size();
    ImageF ip(input.width(), input.height());
    ImageF ii(input.width(), input.height());
    for (std::size_t i = 0; i < n; ++i) {
        ip[i] = guide[i] * input[i];
        ii[i] = guide[i] * guide[i];
    }
    const ImageF mean_i = box_mean(guide, radius);
    const ImageF mean_p = box_mean(input, radius);
    const ImageF mean_ip = box_mean(ip, radius);
    const ImageF mean_ii = box_mean(ii, radius);
    ImageF a(input.width(), input.height());
    ImageF b(input.width(), input.height());
    for (std::size_t i = 0; i < n; ++i) {
        const double cov = mean_ip[i] - mean_i[i] * mean_p[i];
        const double var = mean_ii[i] - mean_i[i] * mean_i[i];
        a[i] = cov / (var + epsilon);
        b[i] = mean_p[i] - a[i] * mean_i[i];
    }
    const ImageF mean_a = box_mean(a, radius);
    const ImageF mean_b = box_mean(b, radius);
    ImageF q(input.width(), input.height());
    for (std::size_t i = 0; i < n; ++i) q[i] = mean_a[i] * guide[i] + mean_b[i];
    return q;
}

Frame guided_filter(const Frame& input, const Frame& guide, int radius, double epsilon) {
    Frame out = input;
    out.intensities = guided_filter(input.intensities, guide.intensities, radius, epsilon);
    return out;
}

}  // namespace sonarflow
