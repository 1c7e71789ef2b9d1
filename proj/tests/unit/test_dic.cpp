#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include "rectidic/dic.hpp"
#include "test_helpers.hpp"

using namespace rectidic;
using namespace rectidic::dic;

namespace {

std::vector<double> random_subset(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    std::vector<double> v(n);
    for (auto& x : v) x = dist(rng);
    return v;
}

// Deformed image under a global affine warp anchored at `center`:
// def(W(x)) = ref(x), so def(q) = ref(W^-1(q)).
GrayImage render_affine_deformed(const GrayImage& ref, Vec2 center, const WarpParams& p) {
    const double a = 1.0 + p.ux, b = p.uy;
    const double c = p.vx, d = 1.0 + p.vy;
    const double det = a * d - b * c;
    GrayImage out(ref.width(), ref.height(), 0.5);
    for (int y = 0; y < ref.height(); ++y) {
        for (int x = 0; x < ref.width(); ++x) {
            const double qx = x - center.x - p.u;
            const double qy = y - center.y - p.v;
            const double sx = center.x + (d * qx - b * qy) / det;
            const double sy = center.y + (-c * qx + a * qy) / det;
            if (!ref.in_domain(sx, sy)) continue;
            out.set(x, y, ref.sample(sx, sy, Interpolation::Bicubic));
        }
    }
    return out;
}

GrayImage shift_integer(const GrayImage& ref, int dx, int dy) {
    GrayImage out(ref.width(), ref.height(), 0.5);
    for (int y = 0; y < ref.height(); ++y) {
        for (int x = 0; x < ref.width(); ++x) {
            const int sx = x - dx, sy = y - dy;
            if (sx < 0 || sx >= ref.width() || sy < 0 || sy >= ref.height()) continue;
            out.set(x, y, ref.at(sx, sy));
        }
    }
    return out;
}

} // namespace

TEST_CASE("self-correlation identities") {
    const auto f = random_subset(23 * 23, 1);
    CHECK(correlation(f, f, Criterion::ZNCC) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(correlation(f, f, Criterion::ZNSSD) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(correlation(f, f, Criterion::SSD) == 0.0);
}

TEST_CASE("zncc ignores intensity offset and positive linear scale") {
    const auto f = random_subset(23 * 23, 2);
    auto g = f;
    for (auto& x : g) x = 2.0 * x + 0.1;
    CHECK(correlation(f, g, Criterion::ZNCC) == doctest::Approx(1.0).epsilon(1e-12));

    // General affine invariance against a separate deformed subset.
    const auto h = random_subset(23 * 23, 3);
    auto h_affine = h;
    for (auto& x : h_affine) x = 1.7 * x + 0.25;
    CHECK(std::abs(correlation(f, h_affine, Criterion::ZNCC) -
                   correlation(f, h, Criterion::ZNCC)) < 1e-10);
}

TEST_CASE("znssd equals 2(1 - zncc)") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto f = random_subset(15 * 15, 100 + seed);
        const auto g = random_subset(15 * 15, 200 + seed);
        const double zncc = correlation(f, g, Criterion::ZNCC);
        const double znssd = correlation(f, g, Criterion::ZNSSD);
        CHECK(std::abs(znssd - 2.0 * (1.0 - zncc)) < 1e-10);
        CHECK(zncc >= -1.0);
        CHECK(zncc <= 1.0);
        CHECK(znssd >= 0.0);
        CHECK(correlation(f, g, Criterion::SSD) >= 0.0);
    }
}

TEST_CASE("zero-variance subsets are degenerate under zero-normalized criteria") {
    const std::vector<double> flat(11 * 11, 0.4);
    const auto g = random_subset(11 * 11, 4);
    CHECK_THROWS_AS(correlation(flat, g, Criterion::ZNCC), DegenerateSubsetError);
    CHECK_THROWS_AS(correlation(g, flat, Criterion::ZNSSD), DegenerateSubsetError);
    CHECK(correlation(flat, g, Criterion::SSD) >= 0.0);  // plain criteria still defined
    CHECK_THROWS_AS(correlation(flat, {}, Criterion::SSD), InvalidParameterError);
}

TEST_CASE("shape function maps offsets as a first-order warp") {
    const Vec2 center{100.0, 50.0};

    WarpParams identity;
    const Vec2 p0 = warp_subset_point(identity, center, {3.0, -2.0});
    CHECK(p0.x == 103.0);
    CHECK(p0.y == 48.0);

    WarpParams shift;
    shift.u = 3.0;
    shift.v = 2.0;
    const Vec2 p1 = warp_subset_point(shift, center, {5.0, 7.0});
    CHECK(p1.x == doctest::Approx(108.0));
    CHECK(p1.y == doctest::Approx(59.0));

    // Linearized rotation: (u,v,ux,uy,vx,vy) = (0,0,0,-w,w,0).
    const double w = 0.01;
    WarpParams rot;
    rot.uy = -w;
    rot.vx = w;
    const Vec2 p2 = warp_subset_point(rot, center, {10.0, 4.0});
    CHECK(p2.x == doctest::Approx(center.x + 10.0 - w * 4.0).epsilon(1e-14));
    CHECK(p2.y == doctest::Approx(center.y + 4.0 + w * 10.0).epsilon(1e-14));
}

TEST_CASE("optimizer recovers an integer translation from a coarse start") {
    const GrayImage ref = testutil::speckle(96, 96, 11);
    const GrayImage def = shift_integer(ref, 3, 2);

    SubsetParams params;
    WarpParams p0;
    p0.u = 2.5;
    p0.v = 1.5;
    const OptimizeResult res = optimize_subset(ref, def, {48.0, 48.0}, p0, params);
    CHECK(res.converged);
    CHECK(std::abs(res.p.u - 3.0) < 0.01);
    CHECK(std::abs(res.p.v - 2.0) < 0.01);
    CHECK(res.zncc > 0.999);
}

TEST_CASE("optimizer recovers a rendered half-pixel shift") {
    const GrayImage ref = testutil::speckle(96, 96, 12);
    WarpParams truth;
    truth.u = 0.5;
    const GrayImage def = render_affine_deformed(ref, {0.0, 0.0}, truth);

    const OptimizeResult res = optimize_subset(ref, def, {48.0, 48.0}, WarpParams{}, SubsetParams{});
    CHECK(res.converged);
    CHECK(std::abs(res.p.u - 0.5) < 0.02);
    CHECK(std::abs(res.p.v) < 0.02);
}

TEST_CASE("the bilinear interpolation path also recovers translations") {
    const GrayImage ref = testutil::speckle(96, 96, 28);
    const GrayImage def = shift_integer(ref, 2, -1);
    SubsetParams params;
    params.interpolation = Interpolation::Bilinear;
    WarpParams p0;
    p0.u = 1.5;
    p0.v = -0.5;
    const OptimizeResult res = optimize_subset(ref, def, {48.0, 48.0}, p0, params);
    CHECK(res.converged);
    CHECK(std::abs(res.p.u - 2.0) < 0.01);
    CHECK(std::abs(res.p.v + 1.0) < 0.01);
}

TEST_CASE("optimizing an image against itself is the exact fixpoint") {
    const GrayImage ref = testutil::speckle(64, 64, 13);
    const OptimizeResult res = optimize_subset(ref, ref, {32.0, 32.0}, WarpParams{}, SubsetParams{});
    CHECK(res.converged);
    CHECK(std::abs(res.p.u) < 1e-9);
    CHECK(std::abs(res.p.v) < 1e-9);
    CHECK(res.zncc == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("optimizer recovers a full first-order warp on noiseless synthetic data") {
    const GrayImage ref = testutil::speckle(128, 128, 14);
    WarpParams truth;
    truth.u = 1.3;
    truth.v = -0.7;
    truth.ux = 0.004;
    truth.uy = -0.003;
    truth.vx = 0.002;
    truth.vy = 0.005;
    const Vec2 center{64.0, 64.0};
    const GrayImage def = render_affine_deformed(ref, center, truth);

    const OptimizeResult res = optimize_subset(ref, def, center, WarpParams{}, SubsetParams{});
    CHECK(res.converged);
    CHECK(std::abs(res.p.u - truth.u) < 0.01);
    CHECK(std::abs(res.p.v - truth.v) < 0.01);
    CHECK(std::abs(res.p.ux - truth.ux) < 1e-3);
    CHECK(std::abs(res.p.uy - truth.uy) < 1e-3);
    CHECK(std::abs(res.p.vx - truth.vx) < 1e-3);
    CHECK(std::abs(res.p.vy - truth.vy) < 1e-3);
}

TEST_CASE("gauss-newton jacobian of the residual matches central finite differences") {
    // The optimizer linearizes r_i(dp) = [f(W(o; dp)) - f_mean]/f_norm - const
    // around dp = 0 with J_i = grad f * dW/dp / f_norm. Rebuild both sides
    // from the public sampling interface and compare.
    const GrayImage ref = testutil::smooth_random_image(64, 64, 15, 2.0);
    const Vec2 center{32.0, 32.0};
    const int m = 7;
    const int side = 2 * m + 1;
    const std::size_t n = static_cast<std::size_t>(side) * side;

    std::vector<double> f(n);
    std::vector<std::array<double, 6>> jac(n);
    std::size_t i = 0;
    double f_mean = 0.0;
    for (int dy = -m; dy <= m; ++dy) {
        for (int dx = -m; dx <= m; ++dx, ++i) {
            const auto s = ref.sample_bicubic_grad(center.x + dx, center.y + dy);
            f[i] = s.value;
            f_mean += s.value;
            jac[i] = {s.dx, s.dy, s.dx * dx, s.dx * dy, s.dy * dx, s.dy * dy};
        }
    }
    f_mean /= static_cast<double>(n);
    double f_norm = 0.0;
    for (double v : f) f_norm += (v - f_mean) * (v - f_mean);
    f_norm = std::sqrt(f_norm);

    auto residuals = [&](const WarpParams& dp) {
        std::vector<double> vals(n);
        std::size_t k = 0;
        double mean = 0.0;
        for (int dy = -m; dy <= m; ++dy) {
            for (int dx = -m; dx <= m; ++dx, ++k) {
                const Vec2 q = warp_subset_point(dp, center,
                                                 {static_cast<double>(dx), static_cast<double>(dy)});
                vals[k] = ref.sample(q.x, q.y, Interpolation::Bicubic);
                mean += vals[k];
            }
        }
        mean /= static_cast<double>(n);
        for (auto& v : vals) v = (v - f_mean) / f_norm;  // frozen normalization
        return vals;
    };

    // Catmull-Rom is only C^1 at the nodes, so the difference step must be
    // small enough that the curvature jump contributes below the tolerance.
    const double h = 1e-5;
    double num = 0.0, den = 0.0;
    for (int comp = 0; comp < 6; ++comp) {
        WarpParams plus, minus;
        double* pf[6] = {&plus.u, &plus.v, &plus.ux, &plus.uy, &plus.vx, &plus.vy};
        double* mf[6] = {&minus.u, &minus.v, &minus.ux, &minus.uy, &minus.vx, &minus.vy};
        *pf[comp] = h;
        *mf[comp] = -h;
        const auto rp = residuals(plus);
        const auto rm = residuals(minus);
        for (std::size_t k = 0; k < n; ++k) {
            const double fd = (rp[k] - rm[k]) / (2.0 * h);
            const double an = jac[k][comp] / f_norm;
            num += (fd - an) * (fd - an);
            den += an * an;
        }
    }
    CHECK(std::sqrt(num / den) < 1e-4);
}

TEST_CASE("subset leaving the image raises OutOfBounds") {
    const GrayImage ref = testutil::speckle(64, 64, 16);
    SubsetParams params;
    CHECK_THROWS_AS(optimize_subset(ref, ref, {5.0, 32.0}, WarpParams{}, params),
                    OutOfBoundsError);

    WarpParams run_away;
    run_away.u = 100.0;
    CHECK_THROWS_AS(optimize_subset(ref, ref, {32.0, 32.0}, run_away, params),
                    OutOfBoundsError);
}

TEST_CASE("seed search finds the exact integer shift") {
    const GrayImage ref = testutil::speckle(96, 96, 17);
    const GrayImage def = shift_integer(ref, 7, -4);
    SubsetParams params;

    const WarpParams guess = seed_initial_guess(ref, def, {48.0, 48.0}, 10, params);
    CHECK(guess.u == 7.0);
    CHECK(guess.v == -4.0);
    CHECK(guess.ux == 0.0);

    const WarpParams zero = seed_initial_guess(ref, ref, {48.0, 48.0}, 10, params);
    CHECK(zero.u == 0.0);
    CHECK(zero.v == 0.0);
}

TEST_CASE("a shift outside the search radius is flagged or honestly recovered") {
    // True shift 12 px, window 10 px: the best in-window guess is 2 px off.
    // The optimizer may still walk into the true basin from there; what must
    // never happen is a high-confidence acceptance of a wrong answer.
    const GrayImage ref = testutil::speckle(128, 128, 18);
    const GrayImage def = shift_integer(ref, 12, 0);
    SubsetParams params;

    const WarpParams guess = seed_initial_guess(ref, def, {64.0, 64.0}, 10, params);
    CHECK(std::abs(guess.u) <= 10.0);
    CHECK(std::abs(guess.v) <= 10.0);

    const OptimizeResult res = optimize_subset(ref, def, {64.0, 64.0}, guess, params);
    const bool accepted = res.converged && res.zncc >= params.seed_min_zncc;
    const bool at_truth = std::abs(res.p.u - 12.0) < 0.1 && std::abs(res.p.v) < 0.1;
    if (accepted) CHECK(at_truth);
}

TEST_CASE("a shift far outside the search radius cannot pass seed acceptance") {
    const GrayImage ref = testutil::speckle(128, 128, 27);
    const GrayImage def = shift_integer(ref, 25, 0);
    SubsetParams params;

    const WarpParams guess = seed_initial_guess(ref, def, {64.0, 64.0}, 10, params);
    CHECK(std::abs(guess.u) <= 10.0);
    CHECK(std::abs(guess.v) <= 10.0);

    const OptimizeResult res = optimize_subset(ref, def, {64.0, 64.0}, guess, params);
    const bool accepted = res.converged && res.zncc >= params.seed_min_zncc;
    CHECK_FALSE(accepted);
}

TEST_CASE("seed window leaving the image raises OutOfBounds") {
    const GrayImage ref = testutil::speckle(64, 64, 19);
    CHECK_THROWS_AS(seed_initial_guess(ref, ref, {8.0, 32.0}, 10, SubsetParams{}),
                    OutOfBoundsError);
}

TEST_CASE("rg_dic measures a uniform translation everywhere") {
    const GrayImage ref = testutil::speckle(128, 128, 20);
    const GrayImage def = shift_integer(ref, 3, -2);
    SubsetParams params;

    const RoiMask roi = full_roi(ref, params, {64.0, 64.0});
    WarpParams p0;
    p0.u = 3.0;
    p0.v = -2.0;
    RgTrace trace;
    const DisplacementField field = rg_dic(ref, def, roi, params, p0, &trace);

    std::size_t valid = 0;
    for (std::size_t i = 0; i < field.grid.count(); ++i) {
        if (!field.valid[i]) continue;
        ++valid;
        CHECK(std::abs(field.u[i] - 3.0) < 0.02);
        CHECK(std::abs(field.v[i] + 2.0) < 0.02);
    }
    CHECK(valid == field.grid.count());          // full coverage
    CHECK(trace.computed_points == field.grid.count());
}

TEST_CASE("rg_dic of an image against itself is identically zero") {
    const GrayImage ref = testutil::speckle(96, 96, 21);
    SubsetParams params;
    const RoiMask roi = full_roi(ref, params, {48.0, 48.0});
    const DisplacementField field = rg_dic(ref, ref, roi, params, WarpParams{});
    for (std::size_t i = 0; i < field.grid.count(); ++i) {
        REQUIRE(field.valid[i]);
        CHECK(std::abs(field.u[i]) < 1e-9);
        CHECK(std::abs(field.v[i]) < 1e-9);
        CHECK(field.zncc[i] == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("a second 4-connected component is reported unreachable") {
    const GrayImage ref = testutil::speckle(128, 128, 22);
    SubsetParams params;
    RoiMask roi = full_roi(ref, params, {30.0, 64.0});

    // Two vertical bands separated by a masked-out column range.
    for (int iy = 0; iy < roi.grid.ny; ++iy) {
        for (int ix = 0; ix < roi.grid.nx; ++ix) {
            const double x = roi.grid.node(ix, iy).x;
            roi.inside[roi.grid.index(ix, iy)] = (x < 55.0 || x > 75.0) ? 1 : 0;
        }
    }
    const std::size_t seed_ix = roi.seed_index % roi.grid.nx;
    REQUIRE(roi.grid.node(static_cast<int>(seed_ix), 0).x < 55.0);

    const DisplacementField field = rg_dic(ref, ref, roi, params, WarpParams{});
    for (int iy = 0; iy < roi.grid.ny; ++iy) {
        for (int ix = 0; ix < roi.grid.nx; ++ix) {
            const std::size_t i = roi.grid.index(ix, iy);
            const double x = roi.grid.node(ix, iy).x;
            if (x < 55.0) {
                CHECK(field.valid[i]);
            } else {
                CHECK_FALSE(field.valid[i]);  // far band and masked gap
            }
        }
    }
}

TEST_CASE("rg_dic pops follow max-heap discipline and cover the reachable set") {
    const GrayImage ref = testutil::speckle(96, 96, 23);
    const GrayImage def = render_affine_deformed(ref, {48.0, 48.0}, [] {
        WarpParams p;
        p.u = 0.8;
        p.v = -0.4;
        p.ux = 0.002;
        p.vy = -0.001;
        return p;
    }());
    SubsetParams params;
    const RoiMask roi = full_roi(ref, params, {48.0, 48.0});

    RgTrace trace;
    const DisplacementField field = rg_dic(ref, def, roi, params, WarpParams{}, &trace);

    // Replay: every pop must equal the maximum currently in the heap.
    std::multiset<double> live;
    std::size_t pops = 0;
    for (const auto& e : trace.events) {
        if (e.kind == RgTrace::Event::Kind::Push) {
            live.insert(e.zncc);
        } else {
            REQUIRE_FALSE(live.empty());
            CHECK(e.zncc == *live.rbegin());
            live.erase(std::prev(live.end()));
            ++pops;
        }
    }
    CHECK(live.empty());
    CHECK(pops > 0);

    // Reachable = 4-connected flood fill from the seed over the mask.
    std::vector<std::uint8_t> seen(roi.grid.count(), 0);
    std::vector<std::size_t> stack = {roi.seed_index};
    seen[roi.seed_index] = 1;
    std::size_t reachable = 0;
    while (!stack.empty()) {
        const std::size_t i = stack.back();
        stack.pop_back();
        ++reachable;
        const int ix = static_cast<int>(i % roi.grid.nx);
        const int iy = static_cast<int>(i / roi.grid.nx);
        const int dx[4] = {1, -1, 0, 0}, dy[4] = {0, 0, 1, -1};
        for (int d = 0; d < 4; ++d) {
            const int jx = ix + dx[d], jy = iy + dy[d];
            if (jx < 0 || jx >= roi.grid.nx || jy < 0 || jy >= roi.grid.ny) continue;
            const std::size_t j = roi.grid.index(jx, jy);
            if (!seen[j] && roi.inside[j]) {
                seen[j] = 1;
                stack.push_back(j);
            }
        }
    }
    CHECK(trace.computed_points == reachable);
    std::size_t valid = 0;
    for (auto v : field.valid) valid += v;
    CHECK(valid == reachable);  // clean synthetic data: everything converges
}

TEST_CASE("an untextured deformed image fails the seed") {
    const GrayImage ref = testutil::speckle(64, 64, 24);
    const GrayImage noise = testutil::random_image(64, 64, 25);
    SubsetParams params;
    const RoiMask roi = full_roi(ref, params, {32.0, 32.0});
    CHECK_THROWS_AS(rg_dic(ref, noise, roi, params, WarpParams{}), SeedFailedError);
}

TEST_CASE("roi_from_mask honors the mask raster and validates the seed") {
    const GrayImage ref = testutil::speckle(96, 96, 26);
    SubsetParams params;
    const RoiMask base = full_roi(ref, params, {48.0, 48.0});

    GrayImage mask(96, 96, 0.0);
    for (int y = 30; y < 70; ++y)
        for (int x = 30; x < 70; ++x)
            mask.set(x, y, 1.0);

    const RoiMask roi = roi_from_mask(mask, base.grid, {48.0, 48.0});
    for (int iy = 0; iy < roi.grid.ny; ++iy) {
        for (int ix = 0; ix < roi.grid.nx; ++ix) {
            const Vec2 p = roi.grid.node(ix, iy);
            const bool in = p.x >= 30 && p.x < 70 && p.y >= 30 && p.y < 70;
            CHECK(roi.inside[roi.grid.index(ix, iy)] == (in ? 1 : 0));
        }
    }
    CHECK_THROWS_AS(roi_from_mask(mask, base.grid, {5.0, 5.0}), InvalidParameterError);
}
