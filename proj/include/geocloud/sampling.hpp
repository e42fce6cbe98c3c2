#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "geocloud/point_cloud.hpp"

namespace geocloud {

/// Fixed-size subsamples of one parent cloud, all carrying the same label.
struct SampleSet {
    std::vector<PointCloud> samples;
    std::string source_label;
};

struct LabeledSample {
    PointCloud cloud;
    std::string label;
};

struct DataSplit {
    std::vector<LabeledSample> train;
    std::vector<LabeledSample> validation;
    std::vector<LabeledSample> test;
    std::array<double, 3> ratios{0.7, 0.15, 0.15};
};

/// Farthest point sampling: the first point is drawn uniformly (seeded), each
/// subsequent point maximizes its minimum distance to the selected set.
/// Runs in O(n*s) with a running min-distance array.
PointCloud fps(const PointCloud& cloud, std::size_t s, std::uint64_t seed);

/// FPS with a forced first point; deterministic. Exposed for tests and for
/// reproducing individual draws.
PointCloud fps_from(const PointCloud& cloud, std::size_t s, std::size_t start_index);

/// `count` FPS draws of size s; draw i uses seed (master_seed + i) so any
/// sample is reproducible in isolation.
SampleSet extract_samples(const PointCloud& cloud, std::size_t count, std::size_t s,
                          const std::string& label, std::uint64_t seed);

/// Shuffles both sets per label (seeded) and splits each label by the given
/// ratios, so per-label counts in every split are equal up to rounding.
DataSplit split_dataset(const SampleSet& a, const SampleSet& b,
                        const std::array<double, 3>& ratios, std::uint64_t seed);

}  // namespace geocloud
