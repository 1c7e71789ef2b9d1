#ifndef RECTIDIC_SIFT_HPP
#define RECTIDIC_SIFT_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "rectidic/image.hpp"

namespace rectidic::sift {

struct PyramidConfig {
    int num_octaves = 4;
    int scales_per_octave = 3;       // s; each octave holds s+3 Gaussian levels
    double base_sigma = 1.6;
    double contrast_threshold = 0.03;
    double edge_ratio_threshold = 10.0;
    bool upsample_input = false;     // 2x initial upsampling, off by default
};

/// Gaussian and difference-of-Gaussian stacks. Level i of octave o carries
/// effective scale base_sigma * k^i * 2^o with k = 2^(1/s); each DoG level
/// is the exact arithmetic difference of its two adjacent Gaussian levels.
struct ScaleSpacePyramid {
    struct Octave {
        std::vector<GrayImage> gaussians;
        std::vector<GrayImage> dogs;  // dogs[i] = gaussians[i+1] - gaussians[i]
    };
    std::vector<Octave> octaves;
    PyramidConfig config;

    double scale_factor() const;                 // k = 2^(1/s)
    double sigma_at(int octave, double level) const;
};

struct KeyPoint {
    double x = 0.0;          // full-resolution image coordinates
    double y = 0.0;
    double sigma = 0.0;      // absolute scale
    double orientation = 0.0; // radians in [0, 2*pi)
    std::array<float, 128> descriptor{};
};

/// Grid-resolution extremum from the 26-neighbor test.
struct Candidate {
    int octave = 0;
    int level = 0;  // DoG level index
    int x = 0;
    int y = 0;
};

/// Sub-pixel location produced by the quadratic refinement step.
struct RefinedPoint {
    int octave = 0;
    double level = 0.0;  // fractional DoG level
    double x = 0.0;      // octave-resolution coordinates
    double y = 0.0;
    double value = 0.0;  // interpolated DoG response
};

ScaleSpacePyramid build_pyramid(const GrayImage& img, const PyramidConfig& cfg);

/// Strict local extrema over the 3x3x3 neighborhood; image borders and the
/// first/last DoG level of each octave are excluded.
std::vector<Candidate> detect_extrema(const ScaleSpacePyramid& pyr);

/// Quadratic (Taylor) refinement with re-centering, contrast and edge-ratio
/// tests. Returns nullopt when the candidate is rejected.
std::optional<RefinedPoint> refine_keypoint(const ScaleSpacePyramid& pyr, const Candidate& cand);

/// Dominant orientation(s) from a 36-bin gradient histogram; secondary peaks
/// above 80% of the maximum yield extra orientations. Empty when the
/// sampling window leaves the image.
std::vector<double> assign_orientation(const ScaleSpacePyramid& pyr, const RefinedPoint& pt);

/// 4x4 sub-regions x 8 orientation bins over a rotated 16x16 neighborhood;
/// L2-normalized, clamped at 0.2, renormalized. Returns nullopt when the
/// window leaves the image.
std::optional<std::array<float, 128>> compute_descriptor(const ScaleSpacePyramid& pyr,
                                                         const RefinedPoint& pt,
                                                         double orientation);

/// Full detector: pyramid, extrema, refinement, orientation, descriptors.
/// Output is sorted by (y, x, sigma, orientation) and deterministic.
/// Images smaller than 32x32 raise InvalidParameterError.
std::vector<KeyPoint> extract(const GrayImage& img, const PyramidConfig& cfg = {});

} // namespace rectidic::sift

#endif
