#pragma once

#include <cstddef>
#include <vector>

namespace geocloud {

/// Solves the square min-cost assignment problem exactly in O(n^3) via the
/// Jonker-Volgenant shortest augmenting path scheme with dual potentials.
/// cost is row-major n*n; returns column assigned to each row.
std::vector<std::size_t> solve_assignment(const std::vector<double>& cost, std::size_t n);

/// Total cost of an assignment under a row-major cost matrix.
double assignment_cost(const std::vector<double>& cost, std::size_t n,
                       const std::vector<std::size_t>& row_to_col);

}  // namespace geocloud
