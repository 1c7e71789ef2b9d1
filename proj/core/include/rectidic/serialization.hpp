#ifndef RECTIDIC_SERIALIZATION_HPP
#define RECTIDIC_SERIALIZATION_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "rectidic/dic.hpp"
#include "rectidic/geometry.hpp"
#include "rectidic/matching.hpp"
#include "rectidic/sift.hpp"

namespace rectidic {

/// Shortest round-trip decimal rendering; used everywhere a double lands in
/// a text file so identical values produce identical bytes.
std::string format_double(double v);

/// {"h": [[...],[...],[...]]}, row-major, h33 = 1.
void save_homography(const Homography& h, const std::filesystem::path& path);
Homography load_homography(const std::filesystem::path& path);

/// JSON array of {x, y, sigma, orientation, descriptor:[128]}.
void save_keypoints(const std::vector<sift::KeyPoint>& kps, const std::filesystem::path& path);
std::vector<sift::KeyPoint> load_keypoints(const std::filesystem::path& path);

/// CSV `x,y,xp,yp,distance,ratio` with header.
void save_matches_csv(const std::vector<MatchPair>& matches, const std::filesystem::path& path);

/// CSV `x,y,u,v,zncc,valid` plus a JSON sidecar (<path>.meta.json) holding
/// the grid geometry and the parameters used.
struct FieldMetadata {
    dic::SubsetParams params;
    std::string reference;
    std::string deformed;
    std::string software;
};
void save_field_csv(const dic::DisplacementField& field, const std::filesystem::path& path,
                    const FieldMetadata& meta);
dic::DisplacementField load_field_csv(const std::filesystem::path& path);

} // namespace rectidic

#endif
