#ifndef RECTIDIC_GEOMETRY_HPP
#define RECTIDIC_GEOMETRY_HPP

#include <array>
#include <cmath>

#include "rectidic/errors.hpp"

namespace rectidic {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }

/// Row-major 3x3 matrix, the workhorse for projective maps and rotations.
struct Mat3 {
    std::array<std::array<double, 3>, 3> m{};

    static Mat3 identity() {
        Mat3 r;
        r.m[0][0] = r.m[1][1] = r.m[2][2] = 1.0;
        return r;
    }

    double& operator()(int r, int c) { return m[r][c]; }
    double operator()(int r, int c) const { return m[r][c]; }

    Mat3 operator*(const Mat3& o) const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                r.m[i][j] = m[i][0] * o.m[0][j] + m[i][1] * o.m[1][j] + m[i][2] * o.m[2][j];
        return r;
    }

    double det() const {
        return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
               m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
               m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    }

    Mat3 transpose() const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                r.m[i][j] = m[j][i];
        return r;
    }
};

Mat3 inverse(const Mat3& a); // throws InvalidParameterError if singular

/// Applies a projective map to an inhomogeneous point. Throws
/// GeometryViolationError when the point lies on the map's line at infinity.
Vec2 project(const Mat3& h, Vec2 p);

/// Planar projective map with the scale fixed by h33 = 1.
class Homography {
public:
    Homography() : h_(Mat3::identity()) {}

    /// Normalizes by the bottom-right entry. Throws InvalidParameterError if
    /// that entry is (near) zero or the matrix is singular.
    static Homography from_matrix(const Mat3& m);

    const Mat3& matrix() const { return h_; }
    double operator()(int r, int c) const { return h_(r, c); }

    Vec2 map(Vec2 p) const { return project(h_, p); }
    Homography inverse() const;

private:
    explicit Homography(const Mat3& normalized) : h_(normalized) {}
    Mat3 h_;
};

} // namespace rectidic

#endif
