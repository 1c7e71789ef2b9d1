#include "rectidic/dic.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <string>

namespace rectidic::dic {

namespace {

// Below this, a subset is flat for all practical purposes: accumulated
// rounding of a truly constant subset lands around 1e-15.
constexpr double kMinSubsetNorm = 1e-10;

struct SubsetStats {
    double mean = 0.0;
    double norm = 0.0;  // sqrt(sum((v - mean)^2))
};

SubsetStats subset_stats(std::span<const double> v) {
    SubsetStats s;
    for (double x : v) s.mean += x;
    s.mean /= static_cast<double>(v.size());
    double acc = 0.0;
    for (double x : v) {
        const double d = x - s.mean;
        acc += d * d;
    }
    s.norm = std::sqrt(acc);
    return s;
}

} // namespace

double correlation(std::span<const double> ref_subset,
                   std::span<const double> def_subset,
                   Criterion criterion) {
    if (ref_subset.size() != def_subset.size() || ref_subset.empty())
        throw InvalidParameterError("correlation: subsets must be non-empty and equally sized");

    const std::size_t n = ref_subset.size();
    switch (criterion) {
    case Criterion::CC: {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += ref_subset[i] * def_subset[i];
        return acc;
    }
    case Criterion::SSD: {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = ref_subset[i] - def_subset[i];
            acc += d * d;
        }
        return acc;
    }
    case Criterion::ZNCC:
    case Criterion::ZNSSD: {
        const SubsetStats f = subset_stats(ref_subset);
        const SubsetStats g = subset_stats(def_subset);
        if (f.norm < kMinSubsetNorm || g.norm < kMinSubsetNorm)
            throw DegenerateSubsetError("zero-variance subset under a zero-normalized criterion");
        double cross = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            cross += (ref_subset[i] - f.mean) * (def_subset[i] - g.mean);
        const double zncc = std::clamp(cross / (f.norm * g.norm), -1.0, 1.0);
        return criterion == Criterion::ZNCC ? zncc : 2.0 * (1.0 - zncc);
    }
    }
    throw InvalidParameterError("correlation: unknown criterion");
}

Vec2 warp_subset_point(const WarpParams& p, Vec2 center, Vec2 offset) {
    return {center.x + offset.x + p.u + p.ux * offset.x + p.uy * offset.y,
            center.y + offset.y + p.v + p.vx * offset.x + p.vy * offset.y};
}

namespace {

// Local affine form of the shape function, for inverse-compositional updates.
Eigen::Matrix3d warp_matrix(const WarpParams& p) {
    Eigen::Matrix3d a;
    a << 1.0 + p.ux, p.uy, p.u,
         p.vx, 1.0 + p.vy, p.v,
         0.0, 0.0, 1.0;
    return a;
}

WarpParams warp_from_matrix(const Eigen::Matrix3d& a) {
    WarpParams p;
    p.ux = a(0, 0) - 1.0;
    p.uy = a(0, 1);
    p.u = a(0, 2);
    p.vx = a(1, 0);
    p.vy = a(1, 1) - 1.0;
    p.v = a(1, 2);
    return p;
}

bool params_finite(const WarpParams& p) {
    return std::isfinite(p.u) && std::isfinite(p.v) && std::isfinite(p.ux) &&
           std::isfinite(p.uy) && std::isfinite(p.vx) && std::isfinite(p.vy);
}

} // namespace

OptimizeResult optimize_subset(const GrayImage& ref, const GrayImage& def,
                               Vec2 center, const WarpParams& p0,
                               const SubsetParams& params) {
    const int m = params.half_width;
    if (m < 5)
        throw InvalidParameterError("optimize_subset: half_width must be >= 5");
    if (!params_finite(p0))
        throw InvalidParameterError("optimize_subset: non-finite initial parameters");
    if (2 * m + 1 > std::min(ref.width(), ref.height()))
        throw InvalidParameterError("optimize_subset: subset larger than the image");

    // The reference subset including the interpolation stencil must be
    // inside the reference image.
    if (!ref.in_domain(center.x - m - 1, center.y - m - 1) ||
        !ref.in_domain(center.x + m + 1, center.y + m + 1))
        throw OutOfBoundsError("optimize_subset: reference subset leaves the image");

    const int side = 2 * m + 1;
    const std::size_t n = static_cast<std::size_t>(side) * side;

    // Reference values and steepest-descent images, precomputed once.
    std::vector<double> f(n);
    std::vector<std::array<double, 6>> jac(n);
    Eigen::Matrix<double, 6, 6> hessian = Eigen::Matrix<double, 6, 6>::Zero();

    std::size_t i = 0;
    double f_mean = 0.0;
    for (int dy = -m; dy <= m; ++dy) {
        for (int dx = -m; dx <= m; ++dx, ++i) {
            const auto s = ref.sample_bicubic_grad(center.x + dx, center.y + dy);
            f[i] = s.value;
            f_mean += s.value;
            // d(residual)/dp in the order (u, v, ux, uy, vx, vy)
            jac[i] = {s.dx, s.dy, s.dx * dx, s.dx * dy, s.dy * dx, s.dy * dy};
        }
    }
    f_mean /= static_cast<double>(n);
    double f_norm2 = 0.0;
    for (std::size_t idx = 0; idx < n; ++idx) f_norm2 += (f[idx] - f_mean) * (f[idx] - f_mean);
    const double f_norm = std::sqrt(f_norm2);
    if (f_norm < kMinSubsetNorm)
        throw DegenerateSubsetError("optimize_subset: reference subset has zero variance");

    for (std::size_t idx = 0; idx < n; ++idx) {
        const auto& j = jac[idx];
        for (int r = 0; r < 6; ++r)
            for (int c = r; c < 6; ++c)
                hessian(r, c) += j[r] * j[c];
    }
    for (int r = 0; r < 6; ++r)
        for (int c = 0; c < r; ++c)
            hessian(r, c) = hessian(c, r);
    const Eigen::LDLT<Eigen::Matrix<double, 6, 6>> solver(hessian);
    if (solver.info() != Eigen::Success)
        throw DegenerateSubsetError("optimize_subset: singular Gauss-Newton system");

    WarpParams p = p0;
    std::vector<double> g(n);
    OptimizeResult result;

    for (int iter = 0; iter < params.max_iterations; ++iter) {
        if (!params_finite(p))
            throw OutOfBoundsError("optimize_subset: warp diverged");

        // Resample the deformed subset under the current warp.
        std::size_t idx = 0;
        double g_mean = 0.0;
        for (int dy = -m; dy <= m; ++dy) {
            for (int dx = -m; dx <= m; ++dx, ++idx) {
                const Vec2 q = warp_subset_point(p, center,
                                                 {static_cast<double>(dx), static_cast<double>(dy)});
                if (!def.in_domain(q.x, q.y))
                    throw OutOfBoundsError("optimize_subset: warped subset leaves the image");
                g[idx] = def.sample(q.x, q.y, params.interpolation);
                g_mean += g[idx];
            }
        }
        g_mean /= static_cast<double>(n);
        double g_norm2 = 0.0;
        for (std::size_t k = 0; k < n; ++k) g_norm2 += (g[k] - g_mean) * (g[k] - g_mean);
        const double g_norm = std::sqrt(g_norm2);
        if (g_norm < kMinSubsetNorm)
            throw DegenerateSubsetError("optimize_subset: deformed subset has zero variance");

        // Gauss-Newton right-hand side of the normalized least-squares
        // residual; the f_norm/g_norm factor brings g to the scale of f.
        Eigen::Matrix<double, 6, 1> b = Eigen::Matrix<double, 6, 1>::Zero();
        const double ratio = f_norm / g_norm;
        for (std::size_t k = 0; k < n; ++k) {
            const double r = (f[k] - f_mean) - ratio * (g[k] - g_mean);
            for (int c = 0; c < 6; ++c) b(c) += jac[k][c] * r;
        }

        const Eigen::Matrix<double, 6, 1> dp_vec = solver.solve(-b);
        if (!dp_vec.allFinite())
            throw DegenerateSubsetError("optimize_subset: Gauss-Newton update is not finite");
        WarpParams dp;
        dp.u = dp_vec(0);
        dp.v = dp_vec(1);
        dp.ux = dp_vec(2);
        dp.uy = dp_vec(3);
        dp.vx = dp_vec(4);
        dp.vy = dp_vec(5);

        // Inverse-compositional update: W(p) <- W(p) o W(dp)^-1.
        const Eigen::Matrix3d incr = warp_matrix(dp);
        if (std::abs(incr.determinant()) < 1e-12)
            throw OutOfBoundsError("optimize_subset: degenerate warp update");
        p = warp_from_matrix(warp_matrix(p) * incr.inverse());

        result.iterations = iter + 1;
        if (dp_vec.norm() < params.convergence_tol) {
            result.converged = true;
            break;
        }
    }

    // Final quality, reported as ZNCC regardless of the optimized criterion.
    {
        std::size_t idx = 0;
        for (int dy = -m; dy <= m; ++dy) {
            for (int dx = -m; dx <= m; ++dx, ++idx) {
                const Vec2 q = warp_subset_point(p, center,
                                                 {static_cast<double>(dx), static_cast<double>(dy)});
                if (!def.in_domain(q.x, q.y))
                    throw OutOfBoundsError("optimize_subset: warped subset leaves the image");
                g[idx] = def.sample(q.x, q.y, params.interpolation);
            }
        }
        result.zncc = correlation(f, g, Criterion::ZNCC);
    }
    result.p = p;
    return result;
}

WarpParams seed_initial_guess(const GrayImage& ref, const GrayImage& def,
                              Vec2 seed_center, int search_radius,
                              const SubsetParams& params) {
    if (search_radius < 0)
        throw InvalidParameterError("seed_initial_guess: negative search radius");
    const int m = params.half_width;
    const int cx = static_cast<int>(std::lround(seed_center.x));
    const int cy = static_cast<int>(std::lround(seed_center.y));

    if (cx - m < 0 || cx + m >= ref.width() || cy - m < 0 || cy + m >= ref.height())
        throw OutOfBoundsError("seed_initial_guess: reference window leaves the image");
    if (cx - m - search_radius < 0 || cx + m + search_radius >= def.width() ||
        cy - m - search_radius < 0 || cy + m + search_radius >= def.height())
        throw OutOfBoundsError("seed_initial_guess: search window leaves the deformed image");

    const int side = 2 * m + 1;
    const std::size_t n = static_cast<std::size_t>(side) * side;
    std::vector<double> f(n), g(n);
    std::size_t i = 0;
    for (int dy = -m; dy <= m; ++dy)
        for (int dx = -m; dx <= m; ++dx, ++i)
            f[i] = ref.at(cx + dx, cy + dy);

    double best = -std::numeric_limits<double>::infinity();
    int best_u = 0, best_v = 0;
    for (int v = -search_radius; v <= search_radius; ++v) {
        for (int u = -search_radius; u <= search_radius; ++u) {
            std::size_t k = 0;
            for (int dy = -m; dy <= m; ++dy)
                for (int dx = -m; dx <= m; ++dx, ++k)
                    g[k] = def.at(cx + u + dx, cy + v + dy);
            double zncc;
            try {
                zncc = correlation(f, g, Criterion::ZNCC);
            } catch (const DegenerateSubsetError&) {
                continue;
            }
            if (zncc > best) {
                best = zncc;
                best_u = u;
                best_v = v;
            }
        }
    }

    WarpParams p;
    p.u = best_u;
    p.v = best_v;
    return p;
}

RoiMask full_roi(const GrayImage& img, const SubsetParams& params, Vec2 seed_px) {
    const int margin = params.half_width + 2;  // subset plus interpolation stencil
    const int lo_x = margin;
    const int hi_x = img.width() - 1 - margin;
    const int lo_y = margin;
    const int hi_y = img.height() - 1 - margin;
    if (hi_x < lo_x || hi_y < lo_y)
        throw InvalidParameterError("full_roi: image too small for the subset size");

    RoiMask roi;
    roi.grid.origin_x = lo_x;
    roi.grid.origin_y = lo_y;
    roi.grid.spacing = params.spacing;
    roi.grid.nx = (hi_x - lo_x) / params.spacing + 1;
    roi.grid.ny = (hi_y - lo_y) / params.spacing + 1;
    roi.inside.assign(roi.grid.count(), 1);

    const int six = std::clamp(static_cast<int>(std::lround((seed_px.x - lo_x) / params.spacing)),
                               0, roi.grid.nx - 1);
    const int siy = std::clamp(static_cast<int>(std::lround((seed_px.y - lo_y) / params.spacing)),
                               0, roi.grid.ny - 1);
    roi.seed_index = roi.grid.index(six, siy);
    return roi;
}

RoiMask roi_from_mask(const GrayImage& mask, const GridGeometry& grid, Vec2 seed_px) {
    RoiMask roi;
    roi.grid = grid;
    roi.inside.assign(grid.count(), 0);
    for (int iy = 0; iy < grid.ny; ++iy) {
        for (int ix = 0; ix < grid.nx; ++ix) {
            const Vec2 p = grid.node(ix, iy);
            const int px = static_cast<int>(std::lround(p.x));
            const int py = static_cast<int>(std::lround(p.y));
            if (px >= 0 && px < mask.width() && py >= 0 && py < mask.height() &&
                mask.at(px, py) > 0.5)
                roi.inside[grid.index(ix, iy)] = 1;
        }
    }

    const int six = std::clamp(static_cast<int>(std::lround((seed_px.x - grid.origin_x) / grid.spacing)),
                               0, grid.nx - 1);
    const int siy = std::clamp(static_cast<int>(std::lround((seed_px.y - grid.origin_y) / grid.spacing)),
                               0, grid.ny - 1);
    roi.seed_index = roi.grid.index(six, siy);
    if (!roi.inside[roi.seed_index])
        throw InvalidParameterError("roi_from_mask: seed point is outside the mask");
    return roi;
}

DisplacementField rg_dic(const GrayImage& ref, const GrayImage& def,
                         const RoiMask& roi, const SubsetParams& params,
                         const WarpParams& p0_seed, RgTrace* trace) {
    const GridGeometry& grid = roi.grid;
    if (roi.inside.size() != grid.count())
        throw InvalidParameterError("rg_dic: mask size does not match the grid");
    if (roi.seed_index >= grid.count() || !roi.inside[roi.seed_index])
        throw InvalidParameterError("rg_dic: seed is outside the region of interest");

    DisplacementField field(grid);
    enum class State : std::uint8_t { Untouched, Computed };
    std::vector<State> state(grid.count(), State::Untouched);
    // Full warp parameters of computed points; valid neighbors inherit them.
    std::vector<WarpParams> computed_warp(grid.count());

    // Max-heap on ZNCC; FIFO on ties via a monotone counter.
    struct HeapItem {
        double zncc;
        std::uint64_t order;
        std::size_t index;
    };
    auto worse = [](const HeapItem& a, const HeapItem& b) {
        if (a.zncc != b.zncc) return a.zncc < b.zncc;
        return a.order > b.order;
    };
    std::priority_queue<HeapItem, std::vector<HeapItem>, decltype(worse)> heap(worse);
    std::uint64_t order = 0;

    auto optimize_at = [&](std::size_t index, const WarpParams& init) -> bool {
        const int ix = static_cast<int>(index % grid.nx);
        const int iy = static_cast<int>(index / grid.nx);
        try {
            const OptimizeResult r = optimize_subset(ref, def, grid.node(ix, iy), init, params);
            field.u[index] = r.p.u;
            field.v[index] = r.p.v;
            field.zncc[index] = r.zncc;
            field.valid[index] = (r.converged && r.zncc >= params.valid_min_zncc) ? 1 : 0;
            computed_warp[index] = r.p;
        } catch (const Error&) {
            field.valid[index] = 0;
            return false;
        }
        return field.valid[index] != 0;
    };

    // Seed point: must converge convincingly, otherwise the whole field is
    // untrustworthy.
    {
        const int ix = static_cast<int>(roi.seed_index % grid.nx);
        const int iy = static_cast<int>(roi.seed_index / grid.nx);
        OptimizeResult seed;
        try {
            seed = optimize_subset(ref, def, grid.node(ix, iy), p0_seed, params);
        } catch (const Error& e) {
            throw SeedFailedError(std::string("seed optimization failed: ") + e.what());
        }
        if (!seed.converged || seed.zncc < params.seed_min_zncc)
            throw SeedFailedError("seed did not converge with zncc >= " +
                                  std::to_string(params.seed_min_zncc) +
                                  " (got " + std::to_string(seed.zncc) + ")");
        field.u[roi.seed_index] = seed.p.u;
        field.v[roi.seed_index] = seed.p.v;
        field.zncc[roi.seed_index] = seed.zncc;
        field.valid[roi.seed_index] = 1;
        computed_warp[roi.seed_index] = seed.p;
        state[roi.seed_index] = State::Computed;
        heap.push({seed.zncc, order++, roi.seed_index});
        if (trace) {
            trace->events.push_back({RgTrace::Event::Kind::Push, roi.seed_index, seed.zncc});
            trace->computed_points = 1;
        }
    }

    const int dx4[4] = {1, -1, 0, 0};
    const int dy4[4] = {0, 0, 1, -1};

    // Propagate: the most reliable computed point initializes its
    // uncomputed 4-neighbors.
    while (!heap.empty()) {
        const HeapItem top = heap.top();
        heap.pop();
        if (trace) trace->events.push_back({RgTrace::Event::Kind::Pop, top.index, top.zncc});

        const int ix = static_cast<int>(top.index % grid.nx);
        const int iy = static_cast<int>(top.index / grid.nx);
        const WarpParams& init = computed_warp[top.index];

        for (int d = 0; d < 4; ++d) {
            const int nx = ix + dx4[d];
            const int ny = iy + dy4[d];
            if (nx < 0 || nx >= grid.nx || ny < 0 || ny >= grid.ny) continue;
            const std::size_t nidx = grid.index(nx, ny);
            if (state[nidx] != State::Untouched || !roi.inside[nidx]) continue;

            state[nidx] = State::Computed;
            if (trace) ++trace->computed_points;
            if (optimize_at(nidx, init)) {
                heap.push({field.zncc[nidx], order++, nidx});
                if (trace)
                    trace->events.push_back({RgTrace::Event::Kind::Push, nidx, field.zncc[nidx]});
            }
        }
    }

    return field;
}

} // namespace rectidic::dic
