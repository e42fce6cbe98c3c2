#include "geocloud/point_cloud.hpp"

#include <cmath>
#include <cstring>
#include <unordered_set>

#include "geocloud/error.hpp"

namespace geocloud {

PointCloud::PointCloud(std::size_t dim, std::string label)
    : dim_(dim), label_(std::move(label)) {
    if (dim == 0) throw DimensionError("point dimension must be >= 1");
}

PointCloud::PointCloud(std::size_t dim, std::vector<double> data, std::string label)
    : dim_(dim), data_(std::move(data)), label_(std::move(label)) {
    if (dim == 0) throw DimensionError("point dimension must be >= 1");
    if (data_.size() % dim != 0)
        throw DimensionError("coordinate count " + std::to_string(data_.size()) +
                             " is not a multiple of dim " + std::to_string(dim));
}

void PointCloud::push_back(std::span<const double> p) {
    if (dim_ == 0) dim_ = p.size();
    if (p.size() != dim_)
        throw DimensionError("expected dimension " + std::to_string(dim_) + ", got " +
                             std::to_string(p.size()));
    for (double c : p)
        if (!std::isfinite(c)) throw DimensionError("non-finite coordinate");
    data_.insert(data_.end(), p.begin(), p.end());
}

void PointCloud::validate(bool strict_distinct) const {
    for (double c : data_)
        if (!std::isfinite(c)) throw DimensionError("non-finite coordinate");
    if (!strict_distinct) return;
    // exact bit-level duplicate detection
    struct Hash {
        std::size_t operator()(const std::string& s) const { return std::hash<std::string>{}(s); }
    };
    std::unordered_set<std::string, Hash> seen;
    const std::size_t n = size();
    for (std::size_t i = 0; i < n; ++i) {
        auto p = point(i);
        std::string key(reinterpret_cast<const char*>(p.data()), p.size_bytes());
        if (!seen.insert(std::move(key)).second)
            throw DimensionError("duplicate point at index " + std::to_string(i));
    }
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw DimensionError("dimension mismatch: " + std::to_string(a.size()) + " vs " +
                             std::to_string(b.size()));
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

double pairwise_distance(std::span<const double> a, std::span<const double> b) {
    return std::sqrt(squared_distance(a, b));
}

PointCloud normalize_axes(const PointCloud& cloud) {
    const std::size_t n = cloud.size();
    const std::size_t m = cloud.dim();
    std::vector<double> lo(m, 0.0), hi(m, 0.0);
    for (std::size_t a = 0; a < m; ++a) {
        lo[a] = hi[a] = cloud.coord(0, a);
    }
    for (std::size_t i = 1; i < n; ++i)
        for (std::size_t a = 0; a < m; ++a) {
            double c = cloud.coord(i, a);
            if (c < lo[a]) lo[a] = c;
            if (c > hi[a]) hi[a] = c;
        }
    std::vector<double> out;
    out.reserve(n * m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t a = 0; a < m; ++a) {
            double span = hi[a] - lo[a];
            out.push_back(span > 0.0 ? (cloud.coord(i, a) - lo[a]) / span : 0.0);
        }
    return PointCloud(m, std::move(out), cloud.label());
}

}  // namespace geocloud
