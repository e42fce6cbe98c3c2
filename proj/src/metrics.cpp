#include "geocloud/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "geocloud/assignment.hpp"
#include "geocloud/error.hpp"

namespace geocloud {

namespace {

void check_dims(const PointCloud& p, const PointCloud& q) {
    if (p.dim() != q.dim())
        throw DimensionError("cloud dimensions differ: " + std::to_string(p.dim()) + " vs " +
                             std::to_string(q.dim()));
    if (p.empty() || q.empty()) throw EmptyRequest("metric on empty cloud");
}

struct DirectedScan {
    double max_min = 0.0;   // sup over source of nearest-neighbor distance
    double sum_min = 0.0;   // sum over source of nearest-neighbor distance
    double sum_min2 = 0.0;  // same with squared distances
};

DirectedScan directed_scan(const PointCloud& from, const PointCloud& to) {
    DirectedScan r;
    for (std::size_t i = 0; i < from.size(); ++i) {
        auto a = from.point(i);
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < to.size(); ++j) {
            double d2 = squared_distance(a, to.point(j));
            if (d2 < best) best = d2;
        }
        double d = std::sqrt(best);
        r.max_min = std::max(r.max_min, d);
        r.sum_min += d;
        r.sum_min2 += best;
    }
    return r;
}

std::vector<double> pair_matrix(const PointCloud& c) {
    const std::size_t n = c.size();
    std::vector<double> d(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double v = pairwise_distance(c.point(i), c.point(j));
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    return d;
}

/// max over pairs of |dX(i,j) - dY(pi(i),pi(j))|, aborting once >= bound.
double perm_discrepancy(const std::vector<double>& dx, const std::vector<double>& dy,
                        const std::vector<std::size_t>& pi, std::size_t n, double bound) {
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double v = std::fabs(dx[i * n + j] - dy[pi[i] * n + pi[j]]);
            if (v > worst) {
                worst = v;
                if (worst >= bound) return worst;
            }
        }
    }
    return worst;
}

}  // namespace

MetricValue hausdorff(const PointCloud& p, const PointCloud& q) {
    check_dims(p, q);
    double fwd = directed_scan(p, q).max_min;
    double bwd = directed_scan(q, p).max_min;
    return {"hausdorff", std::max(fwd, bwd), true};
}

MetricValue chamfer(const PointCloud& p, const PointCloud& q, bool squared) {
    check_dims(p, q);
    DirectedScan f = directed_scan(p, q);
    DirectedScan b = directed_scan(q, p);
    double np = static_cast<double>(p.size());
    double nq = static_cast<double>(q.size());
    double v = squared ? f.sum_min2 / np + b.sum_min2 / nq : f.sum_min / np + b.sum_min / nq;
    return {"chamfer", v, true};
}

MetricValue emd(const PointCloud& p, const PointCloud& q) {
    check_dims(p, q);
    if (p.size() != q.size())
        throw SizeMismatch("EMD requires equal-size clouds (" + std::to_string(p.size()) +
                           " vs " + std::to_string(q.size()) + ")");
    const std::size_t n = p.size();
    std::vector<double> cost(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            cost[i * n + j] = pairwise_distance(p.point(i), q.point(j));
    auto assignment = solve_assignment(cost, n);
    return {"emd", assignment_cost(cost, n, assignment), true};
}

MetricValue dj(const PointCloud& p, const PointCloud& q, DjMode mode) {
    check_dims(p, q);
    if (p.size() != q.size())
        throw SizeMismatch("d_J requires equal-size clouds (" + std::to_string(p.size()) +
                           " vs " + std::to_string(q.size()) + ")");
    const std::size_t n = p.size();
    auto dx = pair_matrix(p);
    auto dy = pair_matrix(q);

    if (mode == DjMode::Exact) {
        if (n > 9)
            throw TooLargeForExact("exact d_J enumerates n! permutations; n = " +
                                   std::to_string(n) + " > 9");
        std::vector<std::size_t> pi(n);
        std::iota(pi.begin(), pi.end(), 0);
        double best = std::numeric_limits<double>::infinity();
        do {
            best = std::min(best, perm_discrepancy(dx, dy, pi, n, best));
        } while (std::next_permutation(pi.begin(), pi.end()));
        return {"dj", 0.5 * best, true};
    }

    // first-improvement local search over transpositions from the identity
    std::vector<std::size_t> pi(n);
    std::iota(pi.begin(), pi.end(), 0);
    double cur = perm_discrepancy(dx, dy, pi, n, std::numeric_limits<double>::infinity());
    bool improved = true;
    while (improved && cur > 0.0) {
        improved = false;
        for (std::size_t i = 0; i < n && !improved; ++i) {
            for (std::size_t j = i + 1; j < n && !improved; ++j) {
                std::swap(pi[i], pi[j]);
                double trial = perm_discrepancy(dx, dy, pi, n, cur);
                if (trial < cur) {
                    cur = trial;
                    improved = true;
                } else {
                    std::swap(pi[i], pi[j]);
                }
            }
        }
    }
    return {"dj", 0.5 * cur, false};
}

}  // namespace geocloud
