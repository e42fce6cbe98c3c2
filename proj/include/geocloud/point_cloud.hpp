#pragma once

#include <span>
#include <string>
#include <vector>

namespace geocloud {

/// A single m-dimensional point. Used at API boundaries; bulk storage lives
/// in PointCloud.
using Point = std::vector<double>;

/// Ordered set of n points of identical dimension m, stored row-major.
/// Immutable by convention once built (operations return new clouds).
class PointCloud {
public:
    PointCloud() = default;

    /// dim must be >= 1. Data may be appended afterwards via push_back.
    explicit PointCloud(std::size_t dim, std::string label = {});

    /// Builds from row-major coordinates; data.size() must be a multiple of dim.
    PointCloud(std::size_t dim, std::vector<double> data, std::string label = {});

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return dim_ == 0 ? 0 : data_.size() / dim_; }
    bool empty() const { return data_.empty(); }

    std::span<const double> point(std::size_t i) const {
        return {data_.data() + i * dim_, dim_};
    }
    double coord(std::size_t i, std::size_t axis) const { return data_[i * dim_ + axis]; }

    const std::vector<double>& data() const { return data_; }
    const std::string& label() const { return label_; }
    void set_label(std::string label) { label_ = std::move(label); }

    /// Appends one point; throws DimensionError if p.size() != dim, and
    /// rejects non-finite coordinates.
    void push_back(std::span<const double> p);

    /// Throws if any coordinate is non-finite, or (strict) if two points
    /// coincide exactly. Duplicate checking is opt-in because generators and
    /// audio conversion may legitimately produce near-duplicates.
    void validate(bool strict_distinct = false) const;

private:
    std::size_t dim_ = 0;
    std::vector<double> data_;
    std::string label_;
};

/// Euclidean distance between two points of equal dimension.
double pairwise_distance(std::span<const double> a, std::span<const double> b);

double squared_distance(std::span<const double> a, std::span<const double> b);

/// Min-max scales every axis to [0, 1]. Constant axes map to 0.
PointCloud normalize_axes(const PointCloud& cloud);

}  // namespace geocloud
