#include <benchmark/benchmark.h>

#include <random>

#include "sonarflow/filters.hpp"
#include "sonarflow/flow.hpp"
#include "sonarflow/preprocess.hpp"
#include "sonarflow/saliency.hpp"
#include "sonarflow/synth.hpp"
#include "sonarflow/tracking.hpp"

using namespace sonarflow;

namespace {

ImageF noise(int w, int h, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> d(0.0, 1.0);
    ImageF img(w, h);
    for (std::size_t i = 0; i < img.size(); ++i) img[i] = d(rng);
    return gaussian_blur(img, 1.5);
}

void BM_PolyExpand(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const ImageF img = noise(n, n, 1);
    for (auto _ : state) benchmark::DoNotOptimize(poly_expand(img, 5, 1.1));
    state.SetItemsProcessed(state.iterations() * n * n);
}
BENCHMARK(BM_PolyExpand)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_Farneback(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const ImageF a = noise(n + 8, n, 2);
    ImageF b(n, n), c(n, n);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            b(x, y) = a(x + 4, y);
            c(x, y) = a(x, y);
        }
    const FlowParams params;
    for (auto _ : state) benchmark::DoNotOptimize(farneback(b, c, params));
}
BENCHMARK(BM_Farneback)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_GuidedFilter(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const ImageF img = noise(n, n, 3);
    for (auto _ : state) benchmark::DoNotOptimize(guided_filter(img, img, 4, 1e-3));
}
BENCHMARK(BM_GuidedFilter)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_SpectralResidual(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const ImageF img = noise(n, n, 4);
    for (auto _ : state) benchmark::DoNotOptimize(spectral_residual(img));
}
BENCHMARK(BM_SpectralResidual)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_PipelinePreset(benchmark::State& state) {
    SynthScene scene = preset("horizontal-bottle");
    scene.duration_frames = 10;
    const Sequence seq = render_scene(scene).sequence;
    PipelineConfig cfg;
    cfg.threads = 1;
    for (auto _ : state) benchmark::DoNotOptimize(run_pipeline(seq, cfg));
}
BENCHMARK(BM_PipelinePreset)->Unit(benchmark::kMillisecond)->Iterations(3);

}  // namespace

BENCHMARK_MAIN();
