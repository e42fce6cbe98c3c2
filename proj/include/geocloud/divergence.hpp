#pragma once

#include <string>
#include <vector>

#include "geocloud/gmm.hpp"

namespace geocloud {

/// Axis-aligned uniform evaluation grid covering the supports of two GMMs.
struct EvalGrid {
    std::size_t dim = 0;
    std::vector<double> lower;           // per axis
    std::vector<double> upper;           // per axis
    std::size_t points_per_axis = 200;

    double spacing(std::size_t axis) const {
        return (upper[axis] - lower[axis]) / static_cast<double>(points_per_axis - 1);
    }
    double cell_volume() const {
        double v = 1.0;
        for (std::size_t a = 0; a < dim; ++a) v *= spacing(a);
        return v;
    }
    std::size_t total_points() const {
        std::size_t t = 1;
        for (std::size_t a = 0; a < dim; ++a) t *= points_per_axis;
        return t;
    }
    /// Coordinates of grid point `index` in row-major axis order.
    std::vector<double> point(std::size_t index) const;
};

struct DivergenceResult {
    double mskl = 0.0;
    double kl_pq = 0.0;   // volume-weighted grid KL(p||q)
    double kl_qp = 0.0;
    EvalGrid grid;
    bool weighted = true; // cell-volume weighting applied to the MSKL sums

    std::string to_json_string(int indent = 2) const;
};

/// Grid covering the union of both mixtures' mean +- pad*stddev boxes.
/// Only 1D and 2D grids are supported; cost grows exponentially with dim.
EvalGrid make_grid(const GmmParams& p, const GmmParams& q, std::size_t points_per_axis = 200,
                   double pad = 6.0);

/// Volume-weighted grid estimate of KL(p||q) = integral p log(p/q).
/// The density ratio is floored at 1e-300 and cells where p is below
/// 1e-12 * max(p) are skipped.
double kl_grid(const GmmParams& p, const GmmParams& q, const EvalGrid& grid);

/// Modified symmetric KL: half the sum of the two sqrt-density log-ratio
/// sums, both evaluated on the same grid. `weighted` multiplies each term by
/// the cell volume so the estimate approximates an integral; the raw
/// (unweighted) sum is resolution-dependent.
DivergenceResult mskl(const GmmParams& p, const GmmParams& q, const EvalGrid& grid,
                      bool weighted = true);

}  // namespace geocloud
