#ifndef RECTIDIC_IMAGE_HPP
#define RECTIDIC_IMAGE_HPP

#include <cassert>
#include <cstddef>
#include <vector>

#include "rectidic/errors.hpp"

namespace rectidic {

enum class Interpolation { Bilinear, Bicubic };

/// Grayscale raster with double-precision intensities, nominally in [0, 1].
/// Treated as immutable by every algorithm; mutation is only for construction.
class GrayImage {
public:
    GrayImage() = default;
    GrayImage(int width, int height, double fill = 0.0);
    GrayImage(int width, int height, std::vector<double> pixels);

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return pixels_.size(); }

    double at(int x, int y) const {
        assert(x >= 0 && x < width_ && y >= 0 && y < height_);
        return pixels_[static_cast<std::size_t>(y) * width_ + x];
    }
    void set(int x, int y, double v) {
        assert(x >= 0 && x < width_ && y >= 0 && y < height_);
        pixels_[static_cast<std::size_t>(y) * width_ + x] = v;
    }

    /// Edge-replicating lookup; integer coordinates may fall outside.
    double at_clamped(int x, int y) const;

    const std::vector<double>& pixels() const { return pixels_; }

    bool in_domain(double x, double y) const {
        return x >= 0.0 && y >= 0.0 && x <= width_ - 1.0 && y <= height_ - 1.0;
    }

    /// Sub-pixel intensity. The valid domain is [0, width-1] x [0, height-1];
    /// outside it an OutOfBoundsError is thrown and callers pick a fill
    /// policy. Bilinear reproduces stored pixels at integer coordinates and
    /// is exact on linear ramps; bicubic is a Catmull-Rom kernel with
    /// edge-replicated support.
    double sample(double x, double y, Interpolation kind) const;

    struct SampleGrad {
        double value;
        double dx;
        double dy;
    };

    /// Catmull-Rom value plus analytic spatial derivative. At integer
    /// coordinates the derivative equals the central difference of the
    /// stored pixels.
    SampleGrad sample_bicubic_grad(double x, double y) const;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<double> pixels_;
};

/// Separable Gaussian filter, kernel truncated at +/-4 sigma and
/// renormalized to unit sum; borders are edge-replicated. sigma must be
/// positive (InvalidParameterError otherwise).
GrayImage gaussian_blur(const GrayImage& img, double sigma);

} // namespace rectidic

#endif
