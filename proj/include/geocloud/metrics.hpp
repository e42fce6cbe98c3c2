#pragma once

#include <string>

#include "geocloud/point_cloud.hpp"

namespace geocloud {

struct MetricValue {
    std::string name;
    double value = 0.0;
    bool exact = true;  // false when an approximation (e.g. greedy d_J) was used
};

/// Hausdorff distance: max over both directions of the farthest
/// nearest-neighbor distance.
MetricValue hausdorff(const PointCloud& p, const PointCloud& q);

/// Chamfer distance: sum of both directions' average nearest-neighbor
/// distance. `squared` switches to squared distances inside the averages.
MetricValue chamfer(const PointCloud& p, const PointCloud& q, bool squared = false);

/// Earth mover's distance between equal-size clouds: minimum total transport
/// cost over bijections, solved exactly.
MetricValue emd(const PointCloud& p, const PointCloud& q);

enum class DjMode { Exact, Greedy };

/// Permutation metric d_J = min over permutations of the maximum pairwise
/// distance discrepancy (halved). Exact mode enumerates all permutations and
/// requires n <= 9; greedy mode returns an upper bound from first-improvement
/// transposition search starting at the identity.
MetricValue dj(const PointCloud& p, const PointCloud& q, DjMode mode = DjMode::Greedy);

}  // namespace geocloud
