#include "geocloud/sampling.hpp"

#include <cmath>
#include <limits>

#include "geocloud/error.hpp"
#include "geocloud/rng.hpp"

namespace geocloud {

PointCloud fps_from(const PointCloud& cloud, std::size_t s, std::size_t start_index) {
    const std::size_t n = cloud.size();
    if (s == 0) throw EmptyRequest("fps needs s >= 1");
    if (s > n)
        throw InsufficientPoints("requested " + std::to_string(s) + " points from a cloud of " +
                                 std::to_string(n));

    PointCloud out(cloud.dim(), cloud.label());
    out.push_back(cloud.point(start_index));

    // min squared distance from each point to the selected set
    std::vector<double> min_d2(n);
    std::size_t best = 0;
    double best_d2 = -1.0;
    for (std::size_t j = 0; j < n; ++j) {
        min_d2[j] = squared_distance(cloud.point(j), cloud.point(start_index));
        if (min_d2[j] > best_d2) {
            best_d2 = min_d2[j];
            best = j;
        }
    }

    for (std::size_t i = 1; i < s; ++i) {
        out.push_back(cloud.point(best));
        const auto picked = cloud.point(best);
        best_d2 = -1.0;
        std::size_t next = 0;
        for (std::size_t j = 0; j < n; ++j) {
            double d2 = squared_distance(cloud.point(j), picked);
            if (d2 < min_d2[j]) min_d2[j] = d2;
            if (min_d2[j] > best_d2) {
                best_d2 = min_d2[j];
                next = j;
            }
        }
        best = next;
    }
    return out;
}

PointCloud fps(const PointCloud& cloud, std::size_t s, std::uint64_t seed) {
    if (cloud.empty()) throw InsufficientPoints("fps on empty cloud");
    if (s == 0) throw EmptyRequest("fps needs s >= 1");
    Rng rng(seed);
    return fps_from(cloud, s, rng.index(cloud.size()));
}

SampleSet extract_samples(const PointCloud& cloud, std::size_t count, std::size_t s,
                          const std::string& label, std::uint64_t seed) {
    SampleSet set;
    set.source_label = label;
    set.samples.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        set.samples.push_back(fps(cloud, s, seed + i));
        set.samples.back().set_label(label);
    }
    return set;
}

DataSplit split_dataset(const SampleSet& a, const SampleSet& b,
                        const std::array<double, 3>& ratios, std::uint64_t seed) {
    double sum = ratios[0] + ratios[1] + ratios[2];
    if (std::fabs(sum - 1.0) > 1e-9)
        throw RatioError("split ratios sum to " + std::to_string(sum) + ", expected 1");
    for (double r : ratios)
        if (r < 0.0) throw RatioError("negative split ratio");

    DataSplit split;
    split.ratios = ratios;
    // Each label group is shuffled with its own generator seeded identically,
    // so two identical inputs produce identical per-label splits.
    for (const SampleSet* set : {&a, &b}) {
        Rng rng(seed);
        std::vector<std::size_t> order(set->samples.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        rng.shuffle(order);
        const std::size_t n = order.size();
        auto cut1 = static_cast<std::size_t>(std::llround(ratios[0] * static_cast<double>(n)));
        auto cut2 = static_cast<std::size_t>(
            std::llround((ratios[0] + ratios[1]) * static_cast<double>(n)));
        for (std::size_t i = 0; i < n; ++i) {
            LabeledSample ls{set->samples[order[i]], set->source_label};
            if (i < cut1)
                split.train.push_back(std::move(ls));
            else if (i < cut2)
                split.validation.push_back(std::move(ls));
            else
                split.test.push_back(std::move(ls));
        }
    }
    return split;
}

}  // namespace geocloud
