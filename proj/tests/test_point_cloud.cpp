#include <doctest.h>

#include <cmath>

#include "geocloud/error.hpp"
#include "geocloud/point_cloud.hpp"
#include "geocloud/rng.hpp"

using namespace geocloud;

namespace {

// independent oracle: accumulate squared differences one term at a time
double distance_oracle(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(acc);
}

}  // namespace

TEST_CASE("pairwise_distance basics") {
    double o[3] = {0, 0, 0};
    CHECK(pairwise_distance(o, o) == 0.0);

    double a[2] = {0, 0}, b[2] = {3, 4};
    CHECK(pairwise_distance(a, b) == doctest::Approx(5.0));
    CHECK(pairwise_distance(b, a) == doctest::Approx(5.0));
}

TEST_CASE("pairwise_distance dimension mismatch") {
    double a[2] = {0, 0}, b[3] = {1, 2, 3};
    CHECK_THROWS_AS(pairwise_distance(a, b), DimensionError);
}

TEST_CASE("pairwise_distance matches the sum-of-squares oracle") {
    Rng rng(42);
    for (int t = 0; t < 100; ++t) {
        double a[3], b[3];
        for (int i = 0; i < 3; ++i) {
            a[i] = rng.uniform(-10, 10);
            b[i] = rng.uniform(-10, 10);
        }
        CHECK(pairwise_distance(a, b) == doctest::Approx(distance_oracle(a, b)).epsilon(1e-12));
    }
}

TEST_CASE("triangle inequality on random triples") {
    Rng rng(7);
    for (int t = 0; t < 200; ++t) {
        double a[3], b[3], c[3];
        for (int i = 0; i < 3; ++i) {
            a[i] = rng.uniform(-5, 5);
            b[i] = rng.uniform(-5, 5);
            c[i] = rng.uniform(-5, 5);
        }
        CHECK(pairwise_distance(a, c) <=
              pairwise_distance(a, b) + pairwise_distance(b, c) + 1e-9);
    }
}

TEST_CASE("cloud construction and validation") {
    PointCloud cloud(3);
    double p[3] = {1, 2, 3};
    cloud.push_back(p);
    CHECK(cloud.size() == 1);
    CHECK(cloud.dim() == 3);
    CHECK(cloud.coord(0, 1) == 2.0);

    double wrong[2] = {1, 2};
    CHECK_THROWS_AS(cloud.push_back(wrong), DimensionError);

    double bad[3] = {1, std::nan(""), 3};
    CHECK_THROWS_AS(cloud.push_back(bad), DimensionError);

    cloud.push_back(p);  // duplicate is fine unless strict
    CHECK_NOTHROW(cloud.validate(false));
    CHECK_THROWS_AS(cloud.validate(true), DimensionError);
}

TEST_CASE("normalize_axes maps every axis onto [0,1]") {
    PointCloud cloud(2);
    double p1[2] = {10, -1}, p2[2] = {20, 3}, p3[2] = {15, 1};
    cloud.push_back(p1);
    cloud.push_back(p2);
    cloud.push_back(p3);
    PointCloud norm = normalize_axes(cloud);
    CHECK(norm.coord(0, 0) == doctest::Approx(0.0));
    CHECK(norm.coord(1, 0) == doctest::Approx(1.0));
    CHECK(norm.coord(2, 0) == doctest::Approx(0.5));
    CHECK(norm.coord(0, 1) == doctest::Approx(0.0));
    CHECK(norm.coord(1, 1) == doctest::Approx(1.0));
}
