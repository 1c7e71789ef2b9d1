#ifndef RECTIDIC_HOMOGRAPHY_HPP
#define RECTIDIC_HOMOGRAPHY_HPP

#include <cstdint>
#include <vector>

#include "rectidic/geometry.hpp"
#include "rectidic/matching.hpp"

namespace rectidic {

struct RansacConfig {
    double epsilon = 5.0;      // inlier radius in pixels, sensible range 1-10
    int iterations = 2000;
    int min_inliers = 10;
    bool early_exit = false;   // stop once an inlier fraction of 90% is seen
};

/// Direct linear transform over >= 4 correspondences: solves the stacked
/// 2n x 9 system for the null vector via SVD, with Hartley normalization of
/// both point sets, and rescales so h33 = 1. Degenerate configurations
/// (e.g. collinear points) raise DegenerateConfigurationError.
Homography dlt_homography(const std::vector<MatchPair>& matches);

struct RansacResult {
    Homography model;
    std::vector<std::size_t> inliers;  // indices into the input matches
};

/// Random-sample consensus over 4-point DLT models, ||dst - H src||2 <= eps
/// deciding membership; the best consensus set is refit by DLT and the
/// returned inliers are re-evaluated against the refit model. Deterministic
/// for a fixed seed (per-iteration sample streams are derived from
/// seed + iteration index). Raises EstimationFailedError when no model
/// reaches min_inliers.
RansacResult ransac_homography(const std::vector<MatchPair>& matches,
                               const RansacConfig& cfg,
                               std::uint64_t seed);

/// Entry-wise arithmetic mean; inputs all carry h33 = 1, so the mean does
/// too. Empty input raises InvalidParameterError.
Homography mean_homography(const std::vector<Homography>& hs);

} // namespace rectidic

#endif
