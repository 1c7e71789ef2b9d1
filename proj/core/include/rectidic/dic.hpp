#ifndef RECTIDIC_DIC_HPP
#define RECTIDIC_DIC_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "rectidic/geometry.hpp"
#include "rectidic/image.hpp"

namespace rectidic::dic {

enum class Criterion { CC, ZNCC, SSD, ZNSSD };

struct SubsetParams {
    int half_width = 11;     // subset spans (2*half_width+1)^2 pixels
    int spacing = 5;         // correlation-point grid step
    Criterion criterion = Criterion::ZNSSD;  // optimization objective
    Interpolation interpolation = Interpolation::Bicubic;
    int max_iterations = 50;
    double convergence_tol = 1e-4;  // on the parameter-update norm
    double seed_min_zncc = 0.8;     // acceptance threshold for the seed point
    double valid_min_zncc = 0.5;    // per-point validity threshold
};

/// First-order shape function p = (u, v, du/dx, du/dy, dv/dx, dv/dy).
struct WarpParams {
    double u = 0.0, v = 0.0;
    double ux = 0.0, uy = 0.0;
    double vx = 0.0, vy = 0.0;
};

/// Correlation value between two equally sized subsets. Zero-normalized
/// criteria require nonzero variance on both sides (DegenerateSubsetError).
/// ZNCC is clamped into [-1, 1] against rounding.
double correlation(std::span<const double> ref_subset,
                   std::span<const double> def_subset,
                   Criterion criterion);

/// Warped location of a subset sample: offsets map through the shape
/// function, then shift by the subset center.
Vec2 warp_subset_point(const WarpParams& p, Vec2 center, Vec2 offset);

struct OptimizeResult {
    WarpParams p;
    double zncc = -1.0;
    bool converged = false;
    int iterations = 0;
};

/// Inverse-compositional Gauss-Newton minimization of ZNSSD over the six
/// warp parameters, starting from p0. The reference subset is anchored at
/// `center`; the deformed subset is resampled per params.interpolation each
/// iteration. Throws OutOfBoundsError if the subset leaves either image and
/// DegenerateSubsetError for flat subsets. A hit on max_iterations returns
/// converged = false rather than failing.
OptimizeResult optimize_subset(const GrayImage& ref, const GrayImage& def,
                               Vec2 center, const WarpParams& p0,
                               const SubsetParams& params);

/// Integer-pixel exhaustive ZNCC search over +/-search_radius around
/// seed_center; displacement gradients are initialized to zero.
WarpParams seed_initial_guess(const GrayImage& ref, const GrayImage& def,
                              Vec2 seed_center, int search_radius,
                              const SubsetParams& params);

/// Correlation-point lattice: node (ix, iy) sits at
/// (origin_x + ix*spacing, origin_y + iy*spacing).
struct GridGeometry {
    int origin_x = 0;
    int origin_y = 0;
    int spacing = 1;
    int nx = 0;
    int ny = 0;

    std::size_t count() const { return static_cast<std::size_t>(nx) * ny; }
    std::size_t index(int ix, int iy) const { return static_cast<std::size_t>(iy) * nx + ix; }
    Vec2 node(int ix, int iy) const {
        return {static_cast<double>(origin_x) + static_cast<double>(ix) * spacing,
                static_cast<double>(origin_y) + static_cast<double>(iy) * spacing};
    }
    bool operator==(const GridGeometry&) const = default;
};

/// Boolean mask over the correlation grid plus the seed node. Nodes not
/// 4-connected to the seed are reported invalid, never computed.
struct RoiMask {
    GridGeometry grid;
    std::vector<std::uint8_t> inside;
    std::size_t seed_index = 0;
};

/// Largest grid covering the image with enough margin for the subset and
/// the interpolation stencil; all nodes inside, seed = node nearest seed_px.
RoiMask full_roi(const GrayImage& img, const SubsetParams& params, Vec2 seed_px);

/// Restricts a grid to the nodes whose pixel in `mask` is above 0.5.
RoiMask roi_from_mask(const GrayImage& mask, const GridGeometry& grid, Vec2 seed_px);

struct DisplacementField {
    GridGeometry grid;
    std::vector<double> u;
    std::vector<double> v;
    std::vector<double> zncc;
    std::vector<std::uint8_t> valid;

    explicit DisplacementField(const GridGeometry& g = {})
        : grid(g), u(g.count(), 0.0), v(g.count(), 0.0),
          zncc(g.count(), 0.0), valid(g.count(), 0) {}
};

/// Observer hook for the reliability-guided propagation; event order fully
/// determines the heap behavior under test.
struct RgTrace {
    struct Event {
        enum class Kind { Push, Pop } kind;
        std::size_t index;
        double zncc;
    };
    std::vector<Event> events;
    std::size_t computed_points = 0;
};

/// Reliability-guided full-field analysis: the seed is optimized from
/// p0_seed and must converge with ZNCC >= seed_min_zncc (SeedFailedError
/// otherwise); computed points enter a max-heap keyed by ZNCC (FIFO on
/// ties) and the best point's parameters seed its uncomputed 4-neighbors
/// until the reachable region is exhausted. Per-point failures mark the
/// node invalid without aborting the field.
DisplacementField rg_dic(const GrayImage& ref, const GrayImage& def,
                         const RoiMask& roi, const SubsetParams& params,
                         const WarpParams& p0_seed, RgTrace* trace = nullptr);

} // namespace rectidic::dic

#endif
