#ifndef RECTIDIC_SYNTHESIS_HPP
#define RECTIDIC_SYNTHESIS_HPP

#include <cstdint>

#include "rectidic/geometry.hpp"
#include "rectidic/image.hpp"

namespace rectidic {

/// In-plane rotation about the point (x0, 0); positive angles follow the
/// displacement-field convention u = sin(theta + atan((x-x0)/y)) * r + x0 - x.
struct RotationField {
    double x0 = 0.0;
    double theta_rad = 0.0;
};

/// Displacement (u, v) of the pixel at (x, y). Evaluated with atan2 so the
/// y = 0 row takes the continuous limit.
Vec2 rotation_displacement(double x, double y, const RotationField& field);

/// Synthetic deformed image: each output pixel backward-samples the
/// reference at its inverse-rotated location (analytic inverse, rotation by
/// -theta); unmapped pixels are 0.
GrayImage generate_deformed(const GrayImage& ref, const RotationField& field,
                            Interpolation kind = Interpolation::Bicubic);

/// Euler angles around the z-, y- and x-axis, in radians.
struct EulerAngles {
    double alpha = 0.0;  // z
    double beta = 0.0;   // y
    double gamma = 0.0;  // x
};

/// R = Rz(alpha) * Ry(beta) * Rx(gamma).
Mat3 euler_rotation_matrix(const EulerAngles& a);

/// Intrinsics used to turn a camera rotation into an image warp.
struct VirtualCamera {
    double focal_px = 0.0;
    double cx = 0.0;
    double cy = 0.0;

    /// focal = image width, principal point = image center.
    static VirtualCamera defaults_for(const GrayImage& img);
};

struct SimulatedView {
    GrayImage image;
    Homography map;  // the sampling map K R K^-1 the warp used, h33 = 1
};

/// View of a fronto-parallel scene after rotating the camera about its
/// optical center: warps with the rotation-induced homography K R K^-1 and
/// returns that map as ground truth. Throws GeometryViolationError when the
/// normalization entry degenerates.
SimulatedView simulate_camera_rotation(const GrayImage& img, const EulerAngles& a,
                                       const VirtualCamera& cam);

struct SpeckleParams {
    double density = 0.05;    // blobs per pixel
    double min_radius = 2.0;  // blob radius in pixels (sigma = radius / 2)
    double max_radius = 4.0;
    double amplitude = 0.35;  // max absolute blob height
    double base = 0.5;        // background gray level
    double noise_sigma = 0.0; // optional additive Gaussian noise
};

/// Reproducible speckle texture: signed Gaussian blobs on a mid-gray
/// background, clamped to [0.02, 0.98].
GrayImage synthesize_speckle(int width, int height, std::uint64_t seed,
                             const SpeckleParams& params = {});

/// Additive Gaussian intensity noise, clamped to [0, 1].
GrayImage add_gaussian_noise(const GrayImage& img, double sigma, std::uint64_t seed);

} // namespace rectidic

#endif
