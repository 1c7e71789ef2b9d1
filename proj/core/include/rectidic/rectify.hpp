#ifndef RECTIDIC_RECTIFY_HPP
#define RECTIDIC_RECTIFY_HPP

#include "rectidic/geometry.hpp"
#include "rectidic/image.hpp"

namespace rectidic {

/// Backward-mapping perspective warp: output pixel (x, y) takes the bilinear
/// sample of `img` at the projective image of (x, y) under H. Source
/// coordinates outside the input get `fill`. Output dimensions equal input
/// dimensions. Throws InvalidParameterError for singular H.
GrayImage rectify_image(const GrayImage& img, const Homography& h, double fill = 0.0);

/// Same warp with a selectable kernel, for callers that need smoother
/// resampling than the bilinear default.
GrayImage warp_perspective(const GrayImage& img, const Homography& h, double fill,
                           Interpolation kind);

} // namespace rectidic

#endif
