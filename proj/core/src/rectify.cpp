#include "rectidic/rectify.hpp"

namespace rectidic {

GrayImage warp_perspective(const GrayImage& img, const Homography& h, double fill,
                           Interpolation kind) {
    const Mat3& m = h.matrix();

    const int w = img.width();
    const int ht = img.height();
    GrayImage out(w, ht, fill);
    for (int y = 0; y < ht; ++y) {
        for (int x = 0; x < w; ++x) {
            const double denom = m.m[2][0] * x + m.m[2][1] * y + m.m[2][2];
            if (std::abs(denom) < 1e-300) continue;  // keeps the fill value
            const double sx = (m.m[0][0] * x + m.m[0][1] * y + m.m[0][2]) / denom;
            const double sy = (m.m[1][0] * x + m.m[1][1] * y + m.m[1][2]) / denom;
            if (!img.in_domain(sx, sy)) continue;
            out.set(x, y, img.sample(sx, sy, kind));
        }
    }
    return out;
}

GrayImage rectify_image(const GrayImage& img, const Homography& h, double fill) {
    return warp_perspective(img, h, fill, Interpolation::Bilinear);
}

} // namespace rectidic
