#include "rectidic/metrics.hpp"

#include <cmath>

namespace rectidic {

namespace {

struct Accumulated {
    std::vector<double> abs_eu;
    std::vector<double> abs_ev;
};

Accumulated absolute_errors(const dic::DisplacementField& measured,
                            const dic::DisplacementField& truth) {
    if (!(measured.grid == truth.grid))
        throw InvalidParameterError("field comparison: grids differ");
    Accumulated acc;
    for (std::size_t i = 0; i < measured.grid.count(); ++i) {
        if (!measured.valid[i] || !truth.valid[i]) continue;
        acc.abs_eu.push_back(std::abs(measured.u[i] - truth.u[i]));
        acc.abs_ev.push_back(std::abs(measured.v[i] - truth.v[i]));
    }
    if (acc.abs_eu.empty())
        throw InvalidParameterError("field comparison: no overlapping valid points");
    return acc;
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double std_about(const std::vector<double>& v, double mean) {
    double s = 0.0;
    for (double x : v) s += (x - mean) * (x - mean);
    return std::sqrt(s / static_cast<double>(v.size()));
}

} // namespace

ComponentPair mae(const dic::DisplacementField& measured,
                  const dic::DisplacementField& truth) {
    const Accumulated acc = absolute_errors(measured, truth);
    return {mean_of(acc.abs_eu), mean_of(acc.abs_ev)};
}

ComponentPair sdae(const dic::DisplacementField& measured,
                   const dic::DisplacementField& truth) {
    const Accumulated acc = absolute_errors(measured, truth);
    const double mu = mean_of(acc.abs_eu);
    const double mv = mean_of(acc.abs_ev);
    return {std_about(acc.abs_eu, mu), std_about(acc.abs_ev, mv)};
}

ErrorStats field_error(const dic::DisplacementField& measured,
                       const dic::DisplacementField& truth) {
    const Accumulated acc = absolute_errors(measured, truth);
    ErrorStats stats;
    stats.count = acc.abs_eu.size();
    stats.mae = {mean_of(acc.abs_eu), mean_of(acc.abs_ev)};
    stats.sdae = {std_about(acc.abs_eu, stats.mae.u), std_about(acc.abs_ev, stats.mae.v)};
    return stats;
}

ErrorStats field_error(const dic::DisplacementField& measured, const AnalyticField& truth) {
    return field_error(measured, analytic_field(measured.grid, truth));
}

dic::DisplacementField analytic_field(const dic::GridGeometry& grid,
                                      const AnalyticField& truth) {
    dic::DisplacementField field(grid);
    for (int iy = 0; iy < grid.ny; ++iy) {
        for (int ix = 0; ix < grid.nx; ++ix) {
            const Vec2 p = grid.node(ix, iy);
            const Vec2 d = truth(p.x, p.y);
            const std::size_t i = grid.index(ix, iy);
            field.u[i] = d.x;
            field.v[i] = d.y;
            field.zncc[i] = 1.0;
            field.valid[i] = 1;
        }
    }
    return field;
}

} // namespace rectidic
