#include "geocloud/divergence.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "geocloud/error.hpp"

namespace geocloud {

namespace {

constexpr double kDensityFloor = 1e-300;
constexpr double kSkipFraction = 1e-12;  // cells with p below this fraction of max p are skipped

/// Compensated (Kahan) accumulator; keeps grid sums bit-stable in fixed order.
struct Kahan {
    double sum = 0.0;
    double c = 0.0;
    void add(double v) {
        double y = v - c;
        double t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
};

std::vector<double> eval_density(const GmmParams& g, const EvalGrid& grid) {
    const std::size_t total = grid.total_points();
    std::vector<double> out(total);
    std::vector<double> x(grid.dim);
    std::vector<std::size_t> idx(grid.dim, 0);
    for (std::size_t i = 0; i < total; ++i) {
        std::size_t rest = i;
        for (std::size_t a = grid.dim; a-- > 0;) {
            idx[a] = rest % grid.points_per_axis;
            rest /= grid.points_per_axis;
        }
        for (std::size_t a = 0; a < grid.dim; ++a)
            x[a] = grid.lower[a] + grid.spacing(a) * static_cast<double>(idx[a]);
        out[i] = gmm_pdf(x, g);
    }
    return out;
}

}  // namespace

std::vector<double> EvalGrid::point(std::size_t index) const {
    std::vector<double> x(dim);
    for (std::size_t a = dim; a-- > 0;) {
        x[a] = lower[a] + spacing(a) * static_cast<double>(index % points_per_axis);
        index /= points_per_axis;
    }
    return x;
}

EvalGrid make_grid(const GmmParams& p, const GmmParams& q, std::size_t points_per_axis,
                   double pad) {
    if (p.dim != q.dim) throw DimensionError("mixtures have different dimensions");
    if (p.dim > 2)
        throw UnsupportedDimension("grid evaluation supports dim 1 or 2, got " +
                                   std::to_string(p.dim));
    if (points_per_axis < 2) throw SizeError("grid needs at least 2 points per axis");

    EvalGrid grid;
    grid.dim = p.dim;
    grid.points_per_axis = points_per_axis;
    grid.lower.assign(p.dim, std::numeric_limits<double>::infinity());
    grid.upper.assign(p.dim, -std::numeric_limits<double>::infinity());
    for (const GmmParams* g : {&p, &q}) {
        for (std::size_t k = 0; k < g->K; ++k)
            for (std::size_t a = 0; a < g->dim; ++a) {
                double sd = std::sqrt(g->covs[k][a * g->dim + a]);
                grid.lower[a] = std::min(grid.lower[a], g->means[k][a] - pad * sd);
                grid.upper[a] = std::max(grid.upper[a], g->means[k][a] + pad * sd);
            }
    }
    return grid;
}

double kl_grid(const GmmParams& p, const GmmParams& q, const EvalGrid& grid) {
    if (p.dim != grid.dim || q.dim != grid.dim)
        throw DimensionError("grid dimension does not match mixtures");
    auto pv = eval_density(p, grid);
    auto qv = eval_density(q, grid);
    double maxp = *std::max_element(pv.begin(), pv.end());
    double vol = grid.cell_volume();
    Kahan acc;
    for (std::size_t i = 0; i < pv.size(); ++i) {
        if (pv[i] < kSkipFraction * maxp) continue;
        acc.add(pv[i] * std::log(pv[i] / std::max(qv[i], kDensityFloor)) * vol);
    }
    return acc.sum;
}

DivergenceResult mskl(const GmmParams& p, const GmmParams& q, const EvalGrid& grid,
                      bool weighted) {
    if (p.dim != grid.dim || q.dim != grid.dim)
        throw DimensionError("grid dimension does not match mixtures");
    auto pv = eval_density(p, grid);
    auto qv = eval_density(q, grid);
    double maxp = *std::max_element(pv.begin(), pv.end());
    double maxq = *std::max_element(qv.begin(), qv.end());
    double w = weighted ? grid.cell_volume() : 1.0;

    Kahan term_p, term_q;
    for (std::size_t i = 0; i < pv.size(); ++i) {
        double sp = std::sqrt(pv[i]);
        double sq = std::sqrt(qv[i]);
        if (pv[i] >= kSkipFraction * maxp)
            term_p.add(sp * std::log(std::max(sp, kDensityFloor) / std::max(sq, kDensityFloor)) *
                       w);
        if (qv[i] >= kSkipFraction * maxq)
            term_q.add(sq * std::log(std::max(sq, kDensityFloor) / std::max(sp, kDensityFloor)) *
                       w);
    }

    DivergenceResult res;
    res.mskl = 0.5 * (term_p.sum + term_q.sum);
    res.grid = grid;
    res.weighted = weighted;

    double vol = grid.cell_volume();
    Kahan kpq, kqp;
    for (std::size_t i = 0; i < pv.size(); ++i) {
        if (pv[i] >= kSkipFraction * maxp)
            kpq.add(pv[i] * std::log(pv[i] / std::max(qv[i], kDensityFloor)) * vol);
        if (qv[i] >= kSkipFraction * maxq)
            kqp.add(qv[i] * std::log(qv[i] / std::max(pv[i], kDensityFloor)) * vol);
    }
    res.kl_pq = kpq.sum;
    res.kl_qp = kqp.sum;
    return res;
}

std::string DivergenceResult::to_json_string(int indent) const {
    nlohmann::json j;
    j["mskl"] = mskl;
    j["kl_pq"] = kl_pq;
    j["kl_qp"] = kl_qp;
    j["weighted"] = weighted;
    j["grid"] = {{"dim", grid.dim},
                 {"lower", grid.lower},
                 {"upper", grid.upper},
                 {"points_per_axis", grid.points_per_axis},
                 {"cell_volume", grid.cell_volume()}};
    return j.dump(indent);
}

}  // namespace geocloud
