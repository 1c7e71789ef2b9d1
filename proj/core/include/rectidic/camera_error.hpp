#ifndef RECTIDIC_CAMERA_ERROR_HPP
#define RECTIDIC_CAMERA_ERROR_HPP

#include <string>
#include <vector>

#include "rectidic/errors.hpp"

namespace rectidic {

/// Pinhole parameters for the alignment-error model. Units are the
/// caller's, as long as focal_length and object_distance agree; the tilt is
/// the rotation of the principal axis, in radians.
struct CameraGeometry {
    double focal_length = 50.0;
    double object_distance = 1000.0;
    double tilt_rad = 0.0;
};

/// A point on the object plane and its in-plane displacement.
struct ObjectMotion {
    double xa = 0.0;
    double ya = 0.0;
    double dx = 0.0;
    double dy = 0.0;
};

/// Projected horizontal displacement under a perpendicular alignment:
/// f * dx / S.
double projected_dx_perp(const CameraGeometry& g, const ObjectMotion& m);

/// Projected horizontal displacement when the principal axis is tilted;
/// the depth of a point at abscissa x along the tilted view is
/// S - x*sin(theta), which must stay positive (GeometryViolationError).
/// At theta == 0 this reduces exactly to the perpendicular projection.
double projected_dx_nonperp(const CameraGeometry& g, const ObjectMotion& m);

/// Projected vertical displacements, same conventions as above.
double projected_dy_perp(const CameraGeometry& g, const ObjectMotion& m);
double projected_dy_nonperp(const CameraGeometry& g, const ObjectMotion& m);

/// Absolute projected-displacement errors, by definition the absolute
/// difference between the perpendicular and tilted projections.
double error_dx(const CameraGeometry& g, const ObjectMotion& m);
double error_dy(const CameraGeometry& g, const ObjectMotion& m);

enum class ErrorTarget { Dx, Dy };

/// One axis of a parameter sweep: value runs start, start+step, ... while
/// not past stop. Parameter names: f, S, theta (radians), xA, yA, dx, dy.
struct SweepAxis {
    std::string name;
    double start = 0.0;
    double stop = 0.0;
    double step = 1.0;

    std::vector<double> samples() const;
};

struct SweepRow {
    CameraGeometry geometry;
    ObjectMotion motion;
    double error = 0.0;
    bool ok = true;  // false when the geometry guard rejected the row
};

/// Dense Cartesian grid over the given axes (later axes vary fastest),
/// starting from the fixed base configuration. Geometry violations are
/// flagged per row, never dropped.
std::vector<SweepRow> sweep(const CameraGeometry& base_geometry,
                            const ObjectMotion& base_motion,
                            const std::vector<SweepAxis>& axes,
                            ErrorTarget target);

} // namespace rectidic

#endif
