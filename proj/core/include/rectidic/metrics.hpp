#ifndef RECTIDIC_METRICS_HPP
#define RECTIDIC_METRICS_HPP

#include <cstddef>
#include <functional>

#include "rectidic/dic.hpp"

namespace rectidic {

/// A per-component (u, v) statistic.
struct ComponentPair {
    double u = 0.0;
    double v = 0.0;
};

/// Displacement truth as a function of pixel position.
using AnalyticField = std::function<Vec2(double x, double y)>;

struct ErrorStats {
    ComponentPair mae;
    ComponentPair sdae;  // population std of |error| about the MAE
    std::size_t count = 0;
};

/// Mean absolute error between two fields on the same grid; only points
/// valid in both contribute and that count is reported. Mismatched grids or
/// an empty overlap raise InvalidParameterError.
ComponentPair mae(const dic::DisplacementField& measured,
                  const dic::DisplacementField& truth);

/// Population standard deviation of the absolute error about its mean.
ComponentPair sdae(const dic::DisplacementField& measured,
                   const dic::DisplacementField& truth);

/// MAE and SDAE in one pass, field-vs-field or field-vs-analytic-truth.
ErrorStats field_error(const dic::DisplacementField& measured,
                       const dic::DisplacementField& truth);
ErrorStats field_error(const dic::DisplacementField& measured,
                       const AnalyticField& truth);

/// Truth field sampled on a grid (all points valid), for grid-level
/// comparisons against analytic displacement models.
dic::DisplacementField analytic_field(const dic::GridGeometry& grid,
                                      const AnalyticField& truth);

} // namespace rectidic

#endif
