#include "rectidic/sift.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace rectidic::sift {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kOrientationBins = 36;
constexpr double kOrientationSigmaFactor = 1.5;   // window sigma = 1.5 * scale
constexpr double kOrientationRadiusFactor = 3.0;  // radius = 3 * window sigma
constexpr double kSecondaryPeakFraction = 0.8;
constexpr int kDescriptorGrid = 4;   // 4x4 sub-regions
constexpr int kDescriptorBins = 8;
constexpr int kDescriptorWindow = 16;
constexpr double kDescriptorClamp = 0.2;
constexpr int kMaxRefineSteps = 5;

GrayImage downsample_by_two(const GrayImage& img) {
    const int w = (img.width() + 1) / 2;
    const int h = (img.height() + 1) / 2;
    GrayImage out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            out.set(x, y, img.at(2 * x, 2 * y));
    return out;
}

GrayImage upsample_by_two(const GrayImage& img) {
    const int w = img.width() * 2;
    const int h = img.height() * 2;
    GrayImage out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double sx = std::min(x * 0.5, static_cast<double>(img.width() - 1));
            const double sy = std::min(y * 0.5, static_cast<double>(img.height() - 1));
            out.set(x, y, img.sample(sx, sy, Interpolation::Bilinear));
        }
    }
    return out;
}

GrayImage subtract(const GrayImage& a, const GrayImage& b) {
    GrayImage out(a.width(), a.height());
    for (int y = 0; y < a.height(); ++y)
        for (int x = 0; x < a.width(); ++x)
            out.set(x, y, a.at(x, y) - b.at(x, y));
    return out;
}

// Gradient of a Gaussian level by central differences, replicated edges.
inline void gradient_at(const GrayImage& img, int x, int y, double& gx, double& gy) {
    gx = 0.5 * (img.at_clamped(x + 1, y) - img.at_clamped(x - 1, y));
    gy = 0.5 * (img.at_clamped(x, y + 1) - img.at_clamped(x, y - 1));
}

double wrap_angle(double a) {
    a = std::fmod(a, kTwoPi);
    if (a < 0.0) a += kTwoPi;
    return a;
}

} // namespace

double ScaleSpacePyramid::scale_factor() const {
    return std::pow(2.0, 1.0 / config.scales_per_octave);
}

// Effective scale of Gaussian level i in input-image units. DoG level l is
// the difference ending at Gaussian level l+1 and carries that upper scale.
double ScaleSpacePyramid::sigma_at(int octave, double level) const {
    const double k = scale_factor();
    const double input_scale = config.upsample_input ? 0.5 : 1.0;
    return config.base_sigma * std::pow(k, level) * std::pow(2.0, octave) * input_scale;
}

ScaleSpacePyramid build_pyramid(const GrayImage& img, const PyramidConfig& cfg) {
    if (cfg.scales_per_octave < 3)
        throw InvalidParameterError("build_pyramid: scales_per_octave must be >= 3");
    if (cfg.num_octaves < 1)
        throw InvalidParameterError("build_pyramid: num_octaves must be >= 1");
    if (!(cfg.base_sigma > 0.0))
        throw InvalidParameterError("build_pyramid: base_sigma must be positive");

    ScaleSpacePyramid pyr;
    pyr.config = cfg;

    GrayImage base = cfg.upsample_input ? upsample_by_two(img) : img;

    // Auto-reduce the octave count so every octave keeps room for the
    // 3x3 extremum neighborhood and the descriptor window.
    int octaves = cfg.num_octaves;
    {
        int min_dim = std::min(base.width(), base.height());
        int possible = 1;
        while (min_dim / 2 >= 8 && possible < octaves) {
            min_dim /= 2;
            ++possible;
        }
        octaves = std::min(octaves, possible);
    }

    const double k = std::pow(2.0, 1.0 / cfg.scales_per_octave);
    const int levels = cfg.scales_per_octave + 3;

    GrayImage octave_base = gaussian_blur(base, cfg.base_sigma);
    for (int o = 0; o < octaves; ++o) {
        ScaleSpacePyramid::Octave oct;
        oct.gaussians.reserve(levels);
        oct.gaussians.push_back(std::move(octave_base));

        double sigma_prev = cfg.base_sigma;
        for (int i = 1; i < levels; ++i) {
            const double sigma_i = cfg.base_sigma * std::pow(k, i);
            const double inc = std::sqrt(sigma_i * sigma_i - sigma_prev * sigma_prev);
            oct.gaussians.push_back(gaussian_blur(oct.gaussians.back(), inc));
            sigma_prev = sigma_i;
        }
        oct.dogs.reserve(levels - 1);
        for (int i = 1; i < levels; ++i)
            oct.dogs.push_back(subtract(oct.gaussians[i], oct.gaussians[i - 1]));

        if (o + 1 < octaves) {
            // Level s carries sigma 2*base; decimating it restores base sigma
            // at half resolution.
            octave_base = downsample_by_two(oct.gaussians[cfg.scales_per_octave]);
        }
        pyr.octaves.push_back(std::move(oct));
    }
    return pyr;
}

std::vector<Candidate> detect_extrema(const ScaleSpacePyramid& pyr) {
    std::vector<Candidate> out;
    for (std::size_t o = 0; o < pyr.octaves.size(); ++o) {
        const auto& dogs = pyr.octaves[o].dogs;
        if (dogs.size() < 3) continue;
        const int w = dogs[0].width();
        const int h = dogs[0].height();
        for (std::size_t l = 1; l + 1 < dogs.size(); ++l) {
            const GrayImage& below = dogs[l - 1];
            const GrayImage& self = dogs[l];
            const GrayImage& above = dogs[l + 1];
            for (int y = 1; y < h - 1; ++y) {
                for (int x = 1; x < w - 1; ++x) {
                    const double v = self.at(x, y);
                    bool is_max = true;
                    bool is_min = true;
                    for (int dy = -1; dy <= 1 && (is_max || is_min); ++dy) {
                        for (int dx = -1; dx <= 1; ++dx) {
                            for (const GrayImage* level : {&below, &self, &above}) {
                                if (level == &self && dx == 0 && dy == 0) continue;
                                const double n = level->at(x + dx, y + dy);
                                if (n >= v) is_max = false;
                                if (n <= v) is_min = false;
                            }
                        }
                    }
                    if (is_max || is_min)
                        out.push_back(Candidate{static_cast<int>(o), static_cast<int>(l), x, y});
                }
            }
        }
    }
    return out;
}

std::optional<RefinedPoint> refine_keypoint(const ScaleSpacePyramid& pyr, const Candidate& cand) {
    const auto& dogs = pyr.octaves[cand.octave].dogs;
    const int w = dogs[0].width();
    const int h = dogs[0].height();
    const auto& cfg = pyr.config;

    int x = cand.x, y = cand.y, l = cand.level;
    double hx = 0.0, hy = 0.0, hl = 0.0;
    double value = 0.0;

    for (int step = 0; step < kMaxRefineSteps; ++step) {
        if (l < 1 || l + 1 >= static_cast<int>(dogs.size()) ||
            x < 1 || x + 1 >= w || y < 1 || y + 1 >= h)
            return std::nullopt;  // wandered off the usable grid

        const GrayImage& d0 = dogs[l - 1];
        const GrayImage& d1 = dogs[l];
        const GrayImage& d2 = dogs[l + 1];

        const double gx = 0.5 * (d1.at(x + 1, y) - d1.at(x - 1, y));
        const double gy = 0.5 * (d1.at(x, y + 1) - d1.at(x, y - 1));
        const double gl = 0.5 * (d2.at(x, y) - d0.at(x, y));

        const double dxx = d1.at(x + 1, y) - 2.0 * d1.at(x, y) + d1.at(x - 1, y);
        const double dyy = d1.at(x, y + 1) - 2.0 * d1.at(x, y) + d1.at(x, y - 1);
        const double dll = d2.at(x, y) - 2.0 * d1.at(x, y) + d0.at(x, y);
        const double dxy = 0.25 * (d1.at(x + 1, y + 1) - d1.at(x + 1, y - 1) -
                                   d1.at(x - 1, y + 1) + d1.at(x - 1, y - 1));
        const double dxl = 0.25 * (d2.at(x + 1, y) - d2.at(x - 1, y) -
                                   d0.at(x + 1, y) + d0.at(x - 1, y));
        const double dyl = 0.25 * (d2.at(x, y + 1) - d2.at(x, y - 1) -
                                   d0.at(x, y + 1) + d0.at(x, y - 1));

        // Solve H * h = -g for the 3x3 symmetric Hessian by Cramer's rule.
        const double det = dxx * (dyy * dll - dyl * dyl) - dxy * (dxy * dll - dyl * dxl) +
                           dxl * (dxy * dyl - dyy * dxl);
        if (std::abs(det) < 1e-30) return std::nullopt;  // singular: reject

        hx = -((dyy * dll - dyl * dyl) * gx + (dxl * dyl - dxy * dll) * gy +
               (dxy * dyl - dxl * dyy) * gl) / det;
        hy = -((dyl * dxl - dxy * dll) * gx + (dxx * dll - dxl * dxl) * gy +
               (dxy * dxl - dxx * dyl) * gl) / det;
        hl = -((dxy * dyl - dyy * dxl) * gx + (dxy * dxl - dxx * dyl) * gy +
               (dxx * dyy - dxy * dxy) * gl) / det;

        if (std::abs(hx) <= 0.5 && std::abs(hy) <= 0.5 && std::abs(hl) <= 0.5) {
            value = d1.at(x, y) + 0.5 * (gx * hx + gy * hy + gl * hl);

            if (std::abs(value) < cfg.contrast_threshold) return std::nullopt;

            // Edge response: ratio test on the 2x2 spatial Hessian.
            const double tr = dxx + dyy;
            const double det2 = dxx * dyy - dxy * dxy;
            const double r = cfg.edge_ratio_threshold;
            if (det2 <= 0.0 || tr * tr * r >= (r + 1.0) * (r + 1.0) * det2)
                return std::nullopt;

            RefinedPoint pt;
            pt.octave = cand.octave;
            pt.level = l + hl;
            pt.x = x + hx;
            pt.y = y + hy;
            pt.value = value;
            return pt;
        }

        // Re-center on the neighboring grid node and try again.
        x += static_cast<int>(std::lround(std::clamp(hx, -1.0, 1.0)));
        y += static_cast<int>(std::lround(std::clamp(hy, -1.0, 1.0)));
        l += static_cast<int>(std::lround(std::clamp(hl, -1.0, 1.0)));
    }
    return std::nullopt;  // did not settle within the step budget
}

std::vector<double> assign_orientation(const ScaleSpacePyramid& pyr, const RefinedPoint& pt) {
    const auto& oct = pyr.octaves[pt.octave];
    const auto& cfg = pyr.config;

    // Gradients are taken on the Gaussian level nearest the refined scale;
    // DoG level l carries the scale of Gaussian level l+1.
    const int glevel = std::clamp(static_cast<int>(std::lround(pt.level + 1.0)), 0,
                                  static_cast<int>(oct.gaussians.size()) - 1);
    const GrayImage& img = oct.gaussians[glevel];

    const double k = pyr.scale_factor();
    const double scale = cfg.base_sigma * std::pow(k, pt.level + 1.0);  // octave coordinates
    const double win_sigma = kOrientationSigmaFactor * scale;
    const int radius = std::max(1, static_cast<int>(std::lround(kOrientationRadiusFactor * win_sigma)));

    const int cx = static_cast<int>(std::lround(pt.x));
    const int cy = static_cast<int>(std::lround(pt.y));
    if (cx - radius < 0 || cx + radius >= img.width() || cy - radius < 0 ||
        cy + radius >= img.height())
        return {};  // window leaves the image: reject

    double hist[kOrientationBins] = {};
    const double inv_two_sigma2 = 1.0 / (2.0 * win_sigma * win_sigma);
    for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
            double gx, gy;
            gradient_at(img, cx + dx, cy + dy, gx, gy);
            const double mag = std::hypot(gx, gy);
            if (mag == 0.0) continue;
            const double weight = std::exp(-(dx * dx + dy * dy) * inv_two_sigma2);
            const double angle = wrap_angle(std::atan2(gy, gx));
            int bin = static_cast<int>(angle / (kTwoPi / kOrientationBins));
            if (bin >= kOrientationBins) bin = kOrientationBins - 1;
            hist[bin] += weight * mag;
        }
    }

    double peak = 0.0;
    for (double hval : hist) peak = std::max(peak, hval);
    if (peak <= 0.0) return {};

    std::vector<double> orientations;
    for (int b = 0; b < kOrientationBins; ++b) {
        const double hl = hist[(b + kOrientationBins - 1) % kOrientationBins];
        const double hc = hist[b];
        const double hr = hist[(b + 1) % kOrientationBins];
        if (hc < kSecondaryPeakFraction * peak || hc < hl || hc < hr) continue;
        // Parabolic refinement over the three bins around the peak.
        const double denom = hl - 2.0 * hc + hr;
        const double offset = denom != 0.0 ? 0.5 * (hl - hr) / denom : 0.0;
        const double angle = wrap_angle((b + 0.5 + offset) * (kTwoPi / kOrientationBins));
        orientations.push_back(angle);
    }
    return orientations;
}

std::optional<std::array<float, 128>> compute_descriptor(const ScaleSpacePyramid& pyr,
                                                         const RefinedPoint& pt,
                                                         double orientation) {
    const auto& oct = pyr.octaves[pt.octave];
    const auto& cfg = pyr.config;
    const int glevel = std::clamp(static_cast<int>(std::lround(pt.level + 1.0)), 0,
                                  static_cast<int>(oct.gaussians.size()) - 1);
    const GrayImage& img = oct.gaussians[glevel];

    const double k = pyr.scale_factor();
    const double scale = cfg.base_sigma * std::pow(k, pt.level + 1.0);
    // One descriptor sample per scale unit: the 16x16 window spans
    // kDescriptorWindow * scale pixels, rotated into the key point frame.
    const double step = scale;
    const double cos_t = std::cos(orientation);
    const double sin_t = std::sin(orientation);

    // Every rotated sample must fall inside the image (plus the gradient
    // stencil); bound by the window circumradius.
    const double span = (kDescriptorWindow / 2.0 + 0.5) * step * std::numbers::sqrt2 + 2.0;
    if (pt.x - span < 0.0 || pt.x + span >= img.width() || pt.y - span < 0.0 ||
        pt.y + span >= img.height())
        return std::nullopt;

    const double window_sigma = 0.5 * kDescriptorWindow * step;
    const double inv_two_sigma2 = 1.0 / (2.0 * window_sigma * window_sigma);

    double desc[kDescriptorGrid][kDescriptorGrid][kDescriptorBins] = {};

    for (int row = 0; row < kDescriptorWindow; ++row) {
        for (int col = 0; col < kDescriptorWindow; ++col) {
            // Sample offsets in key point frame, centered on the window.
            const double u = (col - (kDescriptorWindow - 1) / 2.0) * step;
            const double v = (row - (kDescriptorWindow - 1) / 2.0) * step;
            const double px = pt.x + cos_t * u - sin_t * v;
            const double py = pt.y + sin_t * u + cos_t * v;

            const int ix = static_cast<int>(std::lround(px));
            const int iy = static_cast<int>(std::lround(py));
            double gx, gy;
            gradient_at(img, ix, iy, gx, gy);
            const double mag = std::hypot(gx, gy);
            if (mag == 0.0) continue;
            const double weight = std::exp(-(u * u + v * v) * inv_two_sigma2);
            const double rel = wrap_angle(std::atan2(gy, gx) - orientation);

            // Trilinear distribution over (sub-region row, column, bin).
            const double rf = row / 4.0 - 0.5;  // sub-region coordinates
            const double cf = col / 4.0 - 0.5;
            const double bf = rel / (kTwoPi / kDescriptorBins);
            const int r0 = static_cast<int>(std::floor(rf));
            const int c0 = static_cast<int>(std::floor(cf));
            const int b0 = static_cast<int>(std::floor(bf)) % kDescriptorBins;
            const double dr = rf - std::floor(rf);
            const double dc = cf - std::floor(cf);
            const double db = bf - std::floor(bf);

            const double contrib = weight * mag;
            for (int ri = 0; ri < 2; ++ri) {
                const int rr = r0 + ri;
                if (rr < 0 || rr >= kDescriptorGrid) continue;
                const double wr = contrib * (ri == 0 ? 1.0 - dr : dr);
                for (int ci = 0; ci < 2; ++ci) {
                    const int cc = c0 + ci;
                    if (cc < 0 || cc >= kDescriptorGrid) continue;
                    const double wc = wr * (ci == 0 ? 1.0 - dc : dc);
                    for (int bi = 0; bi < 2; ++bi) {
                        const int bb = (b0 + bi) % kDescriptorBins;
                        desc[rr][cc][bb] += wc * (bi == 0 ? 1.0 - db : db);
                    }
                }
            }
        }
    }

    std::array<float, 128> out{};
    double norm2 = 0.0;
    for (int r = 0; r < kDescriptorGrid; ++r)
        for (int c = 0; c < kDescriptorGrid; ++c)
            for (int b = 0; b < kDescriptorBins; ++b)
                norm2 += desc[r][c][b] * desc[r][c][b];
    if (norm2 <= 0.0) return std::nullopt;  // flat window carries no signal

    // Normalize, clamp at 0.2 for illumination robustness, renormalize.
    double inv = 1.0 / std::sqrt(norm2);
    double clamped2 = 0.0;
    for (int r = 0; r < kDescriptorGrid; ++r)
        for (int c = 0; c < kDescriptorGrid; ++c)
            for (int b = 0; b < kDescriptorBins; ++b) {
                double val = std::min(desc[r][c][b] * inv, kDescriptorClamp);
                desc[r][c][b] = val;
                clamped2 += val * val;
            }
    inv = 1.0 / std::sqrt(clamped2);
    int idx = 0;
    for (int r = 0; r < kDescriptorGrid; ++r)
        for (int c = 0; c < kDescriptorGrid; ++c)
            for (int b = 0; b < kDescriptorBins; ++b)
                out[idx++] = static_cast<float>(desc[r][c][b] * inv);
    return out;
}

std::vector<KeyPoint> extract(const GrayImage& img, const PyramidConfig& cfg) {
    if (img.width() < 32 || img.height() < 32)
        throw InvalidParameterError("sift::extract: image must be at least 32x32");

    const ScaleSpacePyramid pyr = build_pyramid(img, cfg);
    const std::vector<Candidate> candidates = detect_extrema(pyr);
    const double input_scale = cfg.upsample_input ? 0.5 : 1.0;

    std::vector<KeyPoint> out;
    for (const Candidate& cand : candidates) {
        const auto refined = refine_keypoint(pyr, cand);
        if (!refined) continue;
        const double octave_scale = std::pow(2.0, refined->octave) * input_scale;
        for (double orientation : assign_orientation(pyr, *refined)) {
            const auto desc = compute_descriptor(pyr, *refined, orientation);
            if (!desc) continue;
            KeyPoint kp;
            kp.x = refined->x * octave_scale;
            kp.y = refined->y * octave_scale;
            kp.sigma = pyr.sigma_at(refined->octave, refined->level + 1.0);
            kp.orientation = orientation;
            kp.descriptor = *desc;
            out.push_back(std::move(kp));
        }
    }

    std::sort(out.begin(), out.end(), [](const KeyPoint& a, const KeyPoint& b) {
        if (a.y != b.y) return a.y < b.y;
        if (a.x != b.x) return a.x < b.x;
        if (a.sigma != b.sigma) return a.sigma < b.sigma;
        return a.orientation < b.orientation;
    });
    return out;
}

} // namespace rectidic::sift
