#include "rectidic/matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

namespace rectidic {

namespace {

// Squared L2 with early abandonment once the bound is exceeded.
double squared_distance(const std::array<float, 128>& a, const std::array<float, 128>& b,
                        double bound) {
    double acc = 0.0;
    for (int i = 0; i < 128; i += 16) {
        for (int j = i; j < i + 16; ++j) {
            const double d = static_cast<double>(a[j]) - b[j];
            acc += d * d;
        }
        if (acc > bound) return acc;
    }
    return acc;
}

} // namespace

std::vector<MatchPair> match_descriptors(const std::vector<sift::KeyPoint>& src_kps,
                                         const std::vector<sift::KeyPoint>& dst_kps,
                                         double delta) {
    if (src_kps.empty())
        throw InvalidParameterError("match_descriptors: no source key points");
    if (dst_kps.size() < 2)
        throw InvalidParameterError("match_descriptors: ratio test needs >= 2 destination key points");
    if (!(delta > 0.0 && delta < 1.0))
        throw InvalidParameterError("match_descriptors: delta must be in (0, 1)");

    struct Claim {
        std::size_t src_index;
        double distance;
        double ratio;
    };
    // Best source claim per destination key point; smaller distance wins.
    std::unordered_map<std::size_t, Claim> claims;
    claims.reserve(src_kps.size());

    for (std::size_t i = 0; i < src_kps.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        double second = std::numeric_limits<double>::infinity();
        std::size_t best_j = 0;
        for (std::size_t j = 0; j < dst_kps.size(); ++j) {
            const double d2 = squared_distance(src_kps[i].descriptor, dst_kps[j].descriptor, second);
            if (d2 < best) {
                second = best;
                best = d2;
                best_j = j;
            } else if (d2 < second) {
                second = d2;
            }
        }

        const double d_best = std::sqrt(best);
        const double d_second = std::sqrt(second);
        const double ratio = d_second > 0.0 ? d_best / d_second : 1.0;
        if (ratio >= delta) continue;  // ambiguous match discarded

        auto it = claims.find(best_j);
        if (it == claims.end() || d_best < it->second.distance)
            claims[best_j] = Claim{i, d_best, ratio};
    }

    std::vector<MatchPair> out;
    out.reserve(claims.size());
    for (const auto& [j, claim] : claims) {
        const auto& s = src_kps[claim.src_index];
        const auto& d = dst_kps[j];
        out.push_back(MatchPair{{s.x, s.y}, {d.x, d.y}, claim.distance, claim.ratio});
    }
    // Canonical order independent of hash-map iteration.
    std::sort(out.begin(), out.end(), [](const MatchPair& a, const MatchPair& b) {
        if (a.src.y != b.src.y) return a.src.y < b.src.y;
        if (a.src.x != b.src.x) return a.src.x < b.src.x;
        if (a.dst.y != b.dst.y) return a.dst.y < b.dst.y;
        return a.dst.x < b.dst.x;
    });
    return out;
}

} // namespace rectidic
