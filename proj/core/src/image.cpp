#include "rectidic/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace rectidic {

GrayImage::GrayImage(int width, int height, double fill) {
    if (width < 1 || height < 1)
        throw InvalidParameterError("image dimensions must be positive");
    width_ = width;
    height_ = height;
    pixels_.assign(static_cast<std::size_t>(width) * height, fill);
}

GrayImage::GrayImage(int width, int height, std::vector<double> pixels) {
    if (width < 1 || height < 1)
        throw InvalidParameterError("image dimensions must be positive");
    if (pixels.size() != static_cast<std::size_t>(width) * height)
        throw InvalidParameterError("pixel count does not match dimensions");
    width_ = width;
    height_ = height;
    pixels_ = std::move(pixels);
}

double GrayImage::at_clamped(int x, int y) const {
    x = std::clamp(x, 0, width_ - 1);
    y = std::clamp(y, 0, height_ - 1);
    return pixels_[static_cast<std::size_t>(y) * width_ + x];
}

namespace {

// Catmull-Rom weights for the fractional offset t in [0, 1).
inline void catmull_rom_weights(double t, double w[4]) {
    const double t2 = t * t;
    const double t3 = t2 * t;
    w[0] = 0.5 * (-t3 + 2.0 * t2 - t);
    w[1] = 0.5 * (3.0 * t3 - 5.0 * t2 + 2.0);
    w[2] = 0.5 * (-3.0 * t3 + 4.0 * t2 + t);
    w[3] = 0.5 * (t3 - t2);
}

inline void catmull_rom_dweights(double t, double w[4]) {
    const double t2 = t * t;
    w[0] = 0.5 * (-3.0 * t2 + 4.0 * t - 1.0);
    w[1] = 0.5 * (9.0 * t2 - 10.0 * t);
    w[2] = 0.5 * (-9.0 * t2 + 8.0 * t + 1.0);
    w[3] = 0.5 * (3.0 * t2 - 2.0 * t);
}

[[noreturn]] void throw_out_of_domain(double x, double y) {
    throw OutOfBoundsError("sample coordinate (" + std::to_string(x) + ", " +
                           std::to_string(y) + ") outside image domain");
}

} // namespace

double GrayImage::sample(double x, double y, Interpolation kind) const {
    if (!in_domain(x, y)) throw_out_of_domain(x, y);

    if (kind == Interpolation::Bilinear) {
        const int x0 = static_cast<int>(std::floor(x));
        const int y0 = static_cast<int>(std::floor(y));
        const double fx = x - x0;
        const double fy = y - y0;
        const int x1 = std::min(x0 + 1, width_ - 1);
        const int y1 = std::min(y0 + 1, height_ - 1);
        const double top = at(x0, y0) * (1.0 - fx) + at(x1, y0) * fx;
        const double bot = at(x0, y1) * (1.0 - fx) + at(x1, y1) * fx;
        return top * (1.0 - fy) + bot * fy;
    }

    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    double wx[4], wy[4];
    catmull_rom_weights(x - x0, wx);
    catmull_rom_weights(y - y0, wy);

    double acc = 0.0;
    for (int j = 0; j < 4; ++j) {
        const int yy = std::clamp(y0 - 1 + j, 0, height_ - 1);
        double row = 0.0;
        for (int i = 0; i < 4; ++i) {
            const int xx = std::clamp(x0 - 1 + i, 0, width_ - 1);
            row += wx[i] * pixels_[static_cast<std::size_t>(yy) * width_ + xx];
        }
        acc += wy[j] * row;
    }
    return acc;
}

GrayImage::SampleGrad GrayImage::sample_bicubic_grad(double x, double y) const {
    if (!in_domain(x, y)) throw_out_of_domain(x, y);

    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    double wx[4], wy[4], dwx[4], dwy[4];
    catmull_rom_weights(x - x0, wx);
    catmull_rom_weights(y - y0, wy);
    catmull_rom_dweights(x - x0, dwx);
    catmull_rom_dweights(y - y0, dwy);

    double v = 0.0, gx = 0.0, gy = 0.0;
    for (int j = 0; j < 4; ++j) {
        const int yy = std::clamp(y0 - 1 + j, 0, height_ - 1);
        double row = 0.0, drow = 0.0;
        const double* base = pixels_.data() + static_cast<std::size_t>(yy) * width_;
        for (int i = 0; i < 4; ++i) {
            const int xx = std::clamp(x0 - 1 + i, 0, width_ - 1);
            row += wx[i] * base[xx];
            drow += dwx[i] * base[xx];
        }
        v += wy[j] * row;
        gx += wy[j] * drow;
        gy += dwy[j] * row;
    }
    return {v, gx, gy};
}

GrayImage gaussian_blur(const GrayImage& img, double sigma) {
    if (!(sigma > 0.0))
        throw InvalidParameterError("gaussian_blur: sigma must be positive");

    const int radius = std::max(1, static_cast<int>(std::ceil(4.0 * sigma)));
    std::vector<double> kernel(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double w = std::exp(-0.5 * (i * i) / (sigma * sigma));
        kernel[i + radius] = w;
        sum += w;
    }
    for (double& w : kernel) w /= sum;

    const int w = img.width();
    const int h = img.height();

    // Horizontal pass with edge replication, then vertical.
    GrayImage tmp(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k)
                acc += kernel[k + radius] * img.at_clamped(x + k, y);
            tmp.set(x, y, acc);
        }
    }
    GrayImage out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k)
                acc += kernel[k + radius] * tmp.at_clamped(x, y + k);
            out.set(x, y, acc);
        }
    }
    return out;
}

} // namespace rectidic
