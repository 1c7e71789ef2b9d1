#include "rectidic/homography.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace rectidic {

Mat3 inverse(const Mat3& a) {
    const double d = a.det();
    if (std::abs(d) < 1e-300)
        throw InvalidParameterError("matrix is singular");
    Mat3 r;
    r.m[0][0] = (a.m[1][1] * a.m[2][2] - a.m[1][2] * a.m[2][1]) / d;
    r.m[0][1] = (a.m[0][2] * a.m[2][1] - a.m[0][1] * a.m[2][2]) / d;
    r.m[0][2] = (a.m[0][1] * a.m[1][2] - a.m[0][2] * a.m[1][1]) / d;
    r.m[1][0] = (a.m[1][2] * a.m[2][0] - a.m[1][0] * a.m[2][2]) / d;
    r.m[1][1] = (a.m[0][0] * a.m[2][2] - a.m[0][2] * a.m[2][0]) / d;
    r.m[1][2] = (a.m[0][2] * a.m[1][0] - a.m[0][0] * a.m[1][2]) / d;
    r.m[2][0] = (a.m[1][0] * a.m[2][1] - a.m[1][1] * a.m[2][0]) / d;
    r.m[2][1] = (a.m[0][1] * a.m[2][0] - a.m[0][0] * a.m[2][1]) / d;
    r.m[2][2] = (a.m[0][0] * a.m[1][1] - a.m[0][1] * a.m[1][0]) / d;
    return r;
}

Vec2 project(const Mat3& h, Vec2 p) {
    const double w = h.m[2][0] * p.x + h.m[2][1] * p.y + h.m[2][2];
    if (std::abs(w) < 1e-300)
        throw GeometryViolationError("point maps to the line at infinity");
    return {(h.m[0][0] * p.x + h.m[0][1] * p.y + h.m[0][2]) / w,
            (h.m[1][0] * p.x + h.m[1][1] * p.y + h.m[1][2]) / w};
}

Homography Homography::from_matrix(const Mat3& m) {
    const double h33 = m.m[2][2];
    if (std::abs(h33) < 1e-12)
        throw InvalidParameterError("homography h33 is (near) zero");
    Mat3 n;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            n.m[i][j] = m.m[i][j] / h33;
    n.m[2][2] = 1.0;
    if (std::abs(n.det()) <= 1e-12)
        throw InvalidParameterError("homography is singular");
    return Homography(n);
}

Homography Homography::inverse() const {
    return from_matrix(rectidic::inverse(h_));
}

namespace {

struct NormalizedPoints {
    std::vector<Vec2> pts;
    Mat3 transform;  // maps raw points to the normalized frame
};

// Hartley normalization: centroid to origin, RMS radius sqrt(2).
NormalizedPoints hartley_normalize(const std::vector<Vec2>& pts) {
    double cx = 0.0, cy = 0.0;
    for (const auto& p : pts) {
        cx += p.x;
        cy += p.y;
    }
    cx /= static_cast<double>(pts.size());
    cy /= static_cast<double>(pts.size());

    double ms = 0.0;
    for (const auto& p : pts) {
        const double dx = p.x - cx;
        const double dy = p.y - cy;
        ms += dx * dx + dy * dy;
    }
    const double rms = std::sqrt(ms / static_cast<double>(pts.size()));
    if (rms < 1e-12)
        throw DegenerateConfigurationError("all points coincide");
    const double s = std::sqrt(2.0) / rms;

    NormalizedPoints out;
    out.pts.reserve(pts.size());
    for (const auto& p : pts) out.pts.push_back({s * (p.x - cx), s * (p.y - cy)});
    out.transform = Mat3::identity();
    out.transform.m[0][0] = s;
    out.transform.m[1][1] = s;
    out.transform.m[0][2] = -s * cx;
    out.transform.m[1][2] = -s * cy;
    return out;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

} // namespace

Homography dlt_homography(const std::vector<MatchPair>& matches) {
    const std::size_t n = matches.size();
    if (n < 4)
        throw InvalidParameterError("dlt_homography needs at least 4 correspondences");

    std::vector<Vec2> src(n), dst(n);
    for (std::size_t i = 0; i < n; ++i) {
        src[i] = matches[i].src;
        dst[i] = matches[i].dst;
    }
    const NormalizedPoints ns = hartley_normalize(src);
    const NormalizedPoints nd = hartley_normalize(dst);

    // Two rows per correspondence:
    //   [ 0  0  0  -x -y -1   y'x  y'y  y' ]
    //   [ x  y  1   0  0  0  -x'x -x'y -x' ]
    Eigen::MatrixXd a(2 * n, 9);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = ns.pts[i].x, y = ns.pts[i].y;
        const double xp = nd.pts[i].x, yp = nd.pts[i].y;
        a.row(2 * i) << 0, 0, 0, -x, -y, -1, yp * x, yp * y, yp;
        a.row(2 * i + 1) << x, y, 1, 0, 0, 0, -xp * x, -xp * y, -xp;
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    // A unique (to scale) solution needs rank 8: the second-smallest
    // singular value must be well separated from zero.
    if (sv(7) < 1e-9 * std::max(sv(0), 1e-300))
        throw DegenerateConfigurationError("correspondences do not determine a homography");

    const Eigen::VectorXd hvec = svd.matrixV().col(8);
    Mat3 hn;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            hn.m[i][j] = hvec(3 * i + j);

    const Mat3 denorm = inverse(nd.transform) * hn * ns.transform;
    const double h33 = std::abs(denorm.m[2][2]);
    if (h33 < 1e-12 || std::abs(denorm.det()) <= 1e-12 * h33 * h33 * h33)
        throw DegenerateConfigurationError("estimated homography is singular");
    return Homography::from_matrix(denorm);
}

RansacResult ransac_homography(const std::vector<MatchPair>& matches,
                               const RansacConfig& cfg,
                               std::uint64_t seed) {
    if (matches.size() < 4)
        throw InvalidParameterError("ransac_homography needs at least 4 matches");
    if (!(cfg.epsilon > 0.0) || cfg.iterations < 1)
        throw InvalidParameterError("ransac_homography: bad configuration");

    const std::size_t n = matches.size();
    const double eps2 = cfg.epsilon * cfg.epsilon;

    auto count_inliers = [&](const Homography& h, std::vector<std::size_t>* out) {
        std::size_t count = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double w = h(2, 0) * matches[i].src.x + h(2, 1) * matches[i].src.y + h(2, 2);
            if (std::abs(w) < 1e-12) continue;
            const double px = (h(0, 0) * matches[i].src.x + h(0, 1) * matches[i].src.y + h(0, 2)) / w;
            const double py = (h(1, 0) * matches[i].src.x + h(1, 1) * matches[i].src.y + h(1, 2)) / w;
            const double dx = px - matches[i].dst.x;
            const double dy = py - matches[i].dst.y;
            if (dx * dx + dy * dy <= eps2) {
                ++count;
                if (out) out->push_back(i);
            }
        }
        return count;
    };

    std::size_t best_count = 0;
    std::vector<std::size_t> best_inliers;
    Homography best_model;
    for (int iter = 0; iter < cfg.iterations; ++iter) {
        // Sample stream tied to (seed, iter) so hypothesis evaluation could
        // run in any order and still select the same model.
        std::mt19937_64 rng(splitmix64(seed ^ (0x5851F42D4C957F2Dull * (iter + 1))));
        std::size_t idx[4];
        for (int k = 0; k < 4;) {
            const std::size_t c = rng() % n;
            bool dup = false;
            for (int j = 0; j < k; ++j) dup |= (idx[j] == c);
            if (!dup) idx[k++] = c;
        }

        std::vector<MatchPair> sample = {matches[idx[0]], matches[idx[1]],
                                         matches[idx[2]], matches[idx[3]]};
        Homography h;
        try {
            h = dlt_homography(sample);
        } catch (const Error&) {
            continue;  // degenerate minimal sample
        }

        std::vector<std::size_t> inliers;
        const std::size_t count = count_inliers(h, &inliers);
        if (count > best_count) {
            best_count = count;
            best_inliers = std::move(inliers);
            best_model = h;
            if (cfg.early_exit && best_count >= (9 * n) / 10) break;
        }
    }

    const auto required = static_cast<std::size_t>(std::max(cfg.min_inliers, 4));
    if (best_count < required)
        throw EstimationFailedError("consensus too small: " + std::to_string(best_count) +
                                    " inliers of " + std::to_string(n) + " matches");

    // Least-squares refit on the consensus set, then re-evaluate membership
    // so the reported inliers hold against the returned model.
    std::vector<MatchPair> support;
    support.reserve(best_inliers.size());
    for (std::size_t i : best_inliers) support.push_back(matches[i]);
    Homography refined = best_model;
    try {
        refined = dlt_homography(support);
    } catch (const Error&) {
        // keep the minimal-sample model
    }

    RansacResult result;
    result.model = refined;
    count_inliers(refined, &result.inliers);
    if (result.inliers.size() < required) {
        result.model = best_model;
        result.inliers.clear();
        count_inliers(best_model, &result.inliers);
    }
    if (result.inliers.size() < required)
        throw EstimationFailedError("refit lost consensus support");
    return result;
}

Homography mean_homography(const std::vector<Homography>& hs) {
    if (hs.empty())
        throw InvalidParameterError("mean_homography: empty input");
    Mat3 acc{};
    for (const auto& h : hs)
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                acc.m[i][j] += h(i, j);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            acc.m[i][j] /= static_cast<double>(hs.size());
    return Homography::from_matrix(acc);
}

} // namespace rectidic
