#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "rectidic/dic.hpp"
#include "rectidic/homography.hpp"
#include "rectidic/image.hpp"
#include "rectidic/matching.hpp"
#include "rectidic/rectify.hpp"
#include "rectidic/sift.hpp"
#include "rectidic/synthesis.hpp"

using namespace rectidic;

namespace {

const GrayImage& speckle512() {
    static const GrayImage img = synthesize_speckle(512, 512, 7);
    return img;
}

GrayImage shifted_speckle() {
    const GrayImage& ref = speckle512();
    dic::WarpParams p;
    p.u = 0.4;
    p.v = -0.3;
    GrayImage out(512, 512, 0.5);
    for (int y = 1; y < 511; ++y)
        for (int x = 1; x < 511; ++x)
            out.set(x, y, ref.sample(x - p.u, y - p.v, Interpolation::Bicubic));
    return out;
}

} // namespace

static void BM_GaussianBlur512(benchmark::State& state) {
    const GrayImage& img = speckle512();
    for (auto _ : state) {
        benchmark::DoNotOptimize(gaussian_blur(img, 1.6));
    }
}
BENCHMARK(BM_GaussianBlur512)->Unit(benchmark::kMillisecond);

static void BM_BicubicSample(benchmark::State& state) {
    const GrayImage& img = speckle512();
    double x = 100.3, acc = 0.0;
    for (auto _ : state) {
        acc += img.sample(x, 200.7, Interpolation::Bicubic);
        x += 0.37;
        if (x > 400.0) x = 100.3;
    }
    benchmark::DoNotOptimize(acc);
}
BENCHMARK(BM_BicubicSample);

static void BM_CorrelationZncc(benchmark::State& state) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    std::vector<double> f(23 * 23), g(23 * 23);
    for (auto& v : f) v = dist(rng);
    for (auto& v : g) v = dist(rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(dic::correlation(f, g, dic::Criterion::ZNCC));
    }
}
BENCHMARK(BM_CorrelationZncc);

static void BM_OptimizeSubset(benchmark::State& state) {
    const GrayImage& ref = speckle512();
    const GrayImage def = shifted_speckle();
    dic::SubsetParams params;
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            dic::optimize_subset(ref, def, {256.0, 256.0}, dic::WarpParams{}, params));
    }
}
BENCHMARK(BM_OptimizeSubset)->Unit(benchmark::kMicrosecond);

static void BM_RgDicField(benchmark::State& state) {
    const GrayImage& ref = speckle512();
    const GrayImage def = shifted_speckle();
    dic::SubsetParams params;
    params.spacing = static_cast<int>(state.range(0));
    const dic::RoiMask roi = dic::full_roi(ref, params, {256.0, 256.0});
    for (auto _ : state) {
        benchmark::DoNotOptimize(dic::rg_dic(ref, def, roi, params, dic::WarpParams{}));
    }
    state.counters["points"] = static_cast<double>(roi.grid.count());
}
BENCHMARK(BM_RgDicField)->Arg(10)->Arg(5)->Unit(benchmark::kMillisecond);

static void BM_SiftExtract(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const GrayImage img = synthesize_speckle(n, n, 11);
    std::size_t kps = 0;
    for (auto _ : state) {
        kps = sift::extract(img, sift::PyramidConfig{}).size();
        benchmark::DoNotOptimize(kps);
    }
    state.counters["keypoints"] = static_cast<double>(kps);
}
BENCHMARK(BM_SiftExtract)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

static void BM_RectifyWarp(benchmark::State& state) {
    const GrayImage& img = speckle512();
    const auto view = simulate_camera_rotation(img, {0.35, 0.0, 0.0},
                                               VirtualCamera::defaults_for(img));
    const Homography h = view.map.inverse();
    for (auto _ : state) {
        benchmark::DoNotOptimize(rectify_image(img, h, 0.0));
    }
}
BENCHMARK(BM_RectifyWarp)->Unit(benchmark::kMillisecond);

static void BM_RansacHomography(benchmark::State& state) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> coord(0.0, 511.0);
    Mat3 m = Mat3::identity();
    m.m[0][2] = 12.0;
    m.m[1][0] = 0.05;
    const Homography truth = Homography::from_matrix(m);
    std::vector<MatchPair> matches;
    for (int i = 0; i < 800; ++i) {
        const Vec2 p{coord(rng), coord(rng)};
        matches.push_back({p, truth.map(p), 0.0, 0.0});
    }
    for (int i = 0; i < 200; ++i)
        matches.push_back({{coord(rng), coord(rng)}, {coord(rng), coord(rng)}, 0.0, 0.0});
    for (auto _ : state) {
        benchmark::DoNotOptimize(ransac_homography(matches, RansacConfig{}, 5));
    }
}
BENCHMARK(BM_RansacHomography)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
