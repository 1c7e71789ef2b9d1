#ifndef RECTIDIC_MATCHING_HPP
#define RECTIDIC_MATCHING_HPP

#include <vector>

#include "rectidic/geometry.hpp"
#include "rectidic/sift.hpp"

namespace rectidic {

/// One-to-one descriptor correspondence. `src` is a point in the image whose
/// coordinates form the right-hand side of the homography equation
/// lambda * dst = H * src.
struct MatchPair {
    Vec2 src;
    Vec2 dst;
    double distance = 0.0;  // descriptor L2 distance of the accepted pair
    double ratio = 0.0;     // closest / next-closest descriptor distance
};

/// Nearest-neighbor matching with the ratio test: a source key point is
/// matched to its closest destination descriptor and kept only when
/// closest/next-closest < delta. Duplicate targets are resolved by keeping
/// the smaller distance. Requires at least two destination key points.
std::vector<MatchPair> match_descriptors(const std::vector<sift::KeyPoint>& src_kps,
                                         const std::vector<sift::KeyPoint>& dst_kps,
                                         double delta);

} // namespace rectidic

#endif
