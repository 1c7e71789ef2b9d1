#include "rectidic/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "rectidic/rectify.hpp"

namespace rectidic {

Vec2 rotation_displacement(double x, double y, const RotationField& field) {
    const double rx = x - field.x0;
    const double r = std::hypot(rx, y);
    // atan2 keeps the y = 0 row continuous where tan^-1(rx/y) blows up.
    const double phi = std::atan2(rx, y);
    const double u = std::sin(field.theta_rad + phi) * r + field.x0 - x;
    const double v = std::cos(field.theta_rad + phi) * r - y;
    return {u, v};
}

GrayImage generate_deformed(const GrayImage& ref, const RotationField& field,
                            Interpolation kind) {
    if (!(std::abs(field.theta_rad) < 1.5707963267948966))
        throw InvalidParameterError("generate_deformed: |theta| must be below pi/2");
    if (field.theta_rad == 0.0) return ref;  // zero rotation is the identity

    // Backward warp; the inverse of the rotation field is the rotation by
    // -theta about the same center, which is exact.
    const RotationField inv{field.x0, -field.theta_rad};
    GrayImage out(ref.width(), ref.height(), 0.0);
    for (int y = 0; y < ref.height(); ++y) {
        for (int x = 0; x < ref.width(); ++x) {
            const Vec2 d = rotation_displacement(x, y, inv);
            const double sx = x + d.x;
            const double sy = y + d.y;
            if (!ref.in_domain(sx, sy)) continue;
            out.set(x, y, ref.sample(sx, sy, kind));
        }
    }
    return out;
}

Mat3 euler_rotation_matrix(const EulerAngles& a) {
    const double ca = std::cos(a.alpha), sa = std::sin(a.alpha);
    const double cb = std::cos(a.beta), sb = std::sin(a.beta);
    const double cg = std::cos(a.gamma), sg = std::sin(a.gamma);

    Mat3 rz = Mat3::identity();
    rz.m[0][0] = ca; rz.m[0][1] = -sa;
    rz.m[1][0] = sa; rz.m[1][1] = ca;

    Mat3 ry = Mat3::identity();
    ry.m[0][0] = cb; ry.m[0][2] = sb;
    ry.m[2][0] = -sb; ry.m[2][2] = cb;

    Mat3 rx = Mat3::identity();
    rx.m[1][1] = cg; rx.m[1][2] = -sg;
    rx.m[2][1] = sg; rx.m[2][2] = cg;

    return rz * ry * rx;
}

VirtualCamera VirtualCamera::defaults_for(const GrayImage& img) {
    VirtualCamera cam;
    cam.focal_px = static_cast<double>(img.width());
    cam.cx = (img.width() - 1) / 2.0;
    cam.cy = (img.height() - 1) / 2.0;
    return cam;
}

SimulatedView simulate_camera_rotation(const GrayImage& img, const EulerAngles& a,
                                       const VirtualCamera& cam) {
    if (!(cam.focal_px > 0.0))
        throw InvalidParameterError("simulate_camera_rotation: focal length must be positive");

    Mat3 k = Mat3::identity();
    k.m[0][0] = cam.focal_px;
    k.m[1][1] = cam.focal_px;
    k.m[0][2] = cam.cx;
    k.m[1][2] = cam.cy;

    Mat3 kinv = Mat3::identity();
    kinv.m[0][0] = 1.0 / cam.focal_px;
    kinv.m[1][1] = 1.0 / cam.focal_px;
    kinv.m[0][2] = -cam.cx / cam.focal_px;
    kinv.m[1][2] = -cam.cy / cam.focal_px;

    const Mat3 h = k * euler_rotation_matrix(a) * kinv;
    if (std::abs(h.m[2][2]) < 1e-9)
        throw GeometryViolationError("rotation-induced homography degenerates at this view");

    SimulatedView view;
    view.map = Homography::from_matrix(h);
    view.image = rectify_image(img, view.map, 0.0);
    return view;
}

GrayImage synthesize_speckle(int width, int height, std::uint64_t seed,
                             const SpeckleParams& params) {
    if (width < 1 || height < 1)
        throw InvalidParameterError("synthesize_speckle: dimensions must be positive");
    if (!(params.density > 0.0) || !(params.min_radius > 0.0) ||
        params.max_radius < params.min_radius)
        throw InvalidParameterError("synthesize_speckle: bad speckle parameters");

    GrayImage img(width, height, params.base);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(0.0, width);
    std::uniform_real_distribution<double> uy(0.0, height);
    std::uniform_real_distribution<double> uradius(params.min_radius, params.max_radius);
    std::uniform_real_distribution<double> uamp(0.4 * params.amplitude, params.amplitude);
    std::bernoulli_distribution usign(0.5);

    const auto blobs = static_cast<std::size_t>(params.density * width * height);
    for (std::size_t b = 0; b < blobs; ++b) {
        const double bx = ux(rng);
        const double by = uy(rng);
        const double sigma = uradius(rng) * 0.5;
        const double amp = uamp(rng) * (usign(rng) ? 1.0 : -1.0);
        const int reach = static_cast<int>(std::ceil(3.0 * sigma));
        const int x0 = std::max(0, static_cast<int>(bx) - reach);
        const int x1 = std::min(width - 1, static_cast<int>(bx) + reach);
        const int y0 = std::max(0, static_cast<int>(by) - reach);
        const int y1 = std::min(height - 1, static_cast<int>(by) + reach);
        const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                const double d2 = (x - bx) * (x - bx) + (y - by) * (y - by);
                img.set(x, y, img.at(x, y) + amp * std::exp(-d2 * inv2s2));
            }
        }
    }

    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            img.set(x, y, std::clamp(img.at(x, y), 0.02, 0.98));

    if (params.noise_sigma > 0.0) {
        std::normal_distribution<double> noise(0.0, params.noise_sigma);
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x)
                img.set(x, y, std::clamp(img.at(x, y) + noise(rng), 0.0, 1.0));
    }
    return img;
}

GrayImage add_gaussian_noise(const GrayImage& img, double sigma, std::uint64_t seed) {
    if (!(sigma >= 0.0))
        throw InvalidParameterError("add_gaussian_noise: sigma must be non-negative");
    GrayImage out = img;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, sigma);
    for (int y = 0; y < out.height(); ++y)
        for (int x = 0; x < out.width(); ++x)
            out.set(x, y, std::clamp(out.at(x, y) + noise(rng), 0.0, 1.0));
    return out;
}

} // namespace rectidic
