#include "rectidic/camera_error.hpp"

#include <cmath>
#include <limits>

namespace rectidic {

namespace {

void check_geometry(const CameraGeometry& g) {
    if (!(g.focal_length > 0.0))
        throw InvalidParameterError("focal length must be positive");
    if (!(g.object_distance > 0.0))
        throw InvalidParameterError("object distance must be positive");
}

// Depth of an object point at abscissa x along the tilted principal axis.
double depth(const CameraGeometry& g, double x) {
    const double d = g.object_distance - x * std::sin(g.tilt_rad);
    if (!(d > 0.0))
        throw GeometryViolationError("object point is not in front of the camera");
    return d;
}

} // namespace

double projected_dx_perp(const CameraGeometry& g, const ObjectMotion& m) {
    check_geometry(g);
    return g.focal_length * m.dx / g.object_distance;
}

double projected_dx_nonperp(const CameraGeometry& g, const ObjectMotion& m) {
    check_geometry(g);
    if (g.tilt_rad == 0.0) return projected_dx_perp(g, m);  // exact reduction
    const double c = std::cos(g.tilt_rad);
    const double d_moved = depth(g, m.xa + m.dx);
    const double d_start = depth(g, m.xa);
    return g.focal_length * ((m.xa + m.dx) * c / d_moved - m.xa * c / d_start);
}

double projected_dy_perp(const CameraGeometry& g, const ObjectMotion& m) {
    check_geometry(g);
    return g.focal_length * m.dy / g.object_distance;
}

double projected_dy_nonperp(const CameraGeometry& g, const ObjectMotion& m) {
    check_geometry(g);
    if (g.tilt_rad == 0.0) return projected_dy_perp(g, m);  // exact reduction
    const double d_moved = depth(g, m.xa + m.dx);
    const double d_start = depth(g, m.xa);
    return g.focal_length * ((m.ya + m.dy) / d_moved - m.ya / d_start);
}

double error_dx(const CameraGeometry& g, const ObjectMotion& m) {
    return std::abs(projected_dx_perp(g, m) - projected_dx_nonperp(g, m));
}

double error_dy(const CameraGeometry& g, const ObjectMotion& m) {
    return std::abs(projected_dy_perp(g, m) - projected_dy_nonperp(g, m));
}

std::vector<double> SweepAxis::samples() const {
    if (!(step > 0.0))
        throw InvalidParameterError("sweep axis step must be positive");
    std::vector<double> out;
    // Half-step slack so the stop value survives accumulated rounding.
    for (double v = start; v <= stop + 0.5 * step; v += step) out.push_back(v);
    return out;
}

namespace {

void apply_axis(CameraGeometry& g, ObjectMotion& m, const std::string& name, double value) {
    if (name == "f") g.focal_length = value;
    else if (name == "S") g.object_distance = value;
    else if (name == "theta") g.tilt_rad = value;
    else if (name == "xA") m.xa = value;
    else if (name == "yA") m.ya = value;
    else if (name == "dx") m.dx = value;
    else if (name == "dy") m.dy = value;
    else throw InvalidParameterError("unknown sweep parameter: " + name);
}

} // namespace

std::vector<SweepRow> sweep(const CameraGeometry& base_geometry,
                            const ObjectMotion& base_motion,
                            const std::vector<SweepAxis>& axes,
                            ErrorTarget target) {
    if (axes.empty())
        throw InvalidParameterError("sweep: at least one axis required");

    std::vector<std::vector<double>> grids;
    grids.reserve(axes.size());
    for (const auto& ax : axes) {
        grids.push_back(ax.samples());
        if (grids.back().empty())
            throw InvalidParameterError("sweep axis '" + ax.name + "' produced no samples");
    }

    std::vector<SweepRow> rows;
    std::vector<std::size_t> cursor(axes.size(), 0);
    while (true) {
        SweepRow row;
        row.geometry = base_geometry;
        row.motion = base_motion;
        for (std::size_t a = 0; a < axes.size(); ++a)
            apply_axis(row.geometry, row.motion, axes[a].name, grids[a][cursor[a]]);
        try {
            row.error = target == ErrorTarget::Dx ? error_dx(row.geometry, row.motion)
                                                  : error_dy(row.geometry, row.motion);
            row.ok = true;
        } catch (const GeometryViolationError&) {
            row.error = std::numeric_limits<double>::quiet_NaN();
            row.ok = false;
        }
        rows.push_back(row);

        // Odometer increment, last axis fastest.
        std::size_t a = axes.size();
        while (a > 0) {
            --a;
            if (++cursor[a] < grids[a].size()) break;
            cursor[a] = 0;
            if (a == 0) return rows;
        }
    }
}

} // namespace rectidic
