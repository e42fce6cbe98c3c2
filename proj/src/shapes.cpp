#include "geocloud/shapes.hpp"

#include <cmath>

#include "geocloud/error.hpp"
#include "geocloud/rng.hpp"

namespace geocloud {

PointCloud generate_cube(std::size_t n, std::uint64_t seed) {
    if (n == 0) throw EmptyRequest("cube generation needs n >= 1");
    Rng rng(seed);
    PointCloud cloud(3, "cube");
    for (std::size_t i = 0; i < n; ++i) {
        double p[3] = {rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)};
        cloud.push_back(p);
    }
    return cloud;
}

PointCloud generate_cone(std::size_t n, std::uint64_t seed) {
    if (n == 0) throw EmptyRequest("cone generation needs n >= 1");
    Rng rng(seed);
    PointCloud cloud(3, "cone");
    for (std::size_t i = 0; i < n; ++i) {
        double theta = rng.uniform(0.0, 2.0 * M_PI);
        double h = rng.uniform(0.0, 2.0);
        double r = 1.0 - h / 2.0;
        double p[3] = {r * std::cos(theta), r * std::sin(theta), h};
        cloud.push_back(p);
    }
    return cloud;
}

PointCloud generate_sphere(std::size_t n, std::uint64_t seed) {
    if (n == 0) throw EmptyRequest("sphere generation needs n >= 1");
    Rng rng(seed);
    PointCloud cloud(3, "sphere");
    for (std::size_t i = 0; i < n; ++i) {
        double theta = rng.uniform(0.0, 2.0 * M_PI);
        double phi = rng.uniform(0.0, M_PI);
        double p[3] = {std::sin(phi) * std::cos(theta), std::sin(phi) * std::sin(theta),
                       std::cos(phi)};
        cloud.push_back(p);
    }
    return cloud;
}

PointCloud generate_shape(const ShapeSpec& spec) {
    switch (spec.kind) {
        case ShapeKind::Cube: return generate_cube(spec.n, spec.seed);
        case ShapeKind::Cone: return generate_cone(spec.n, spec.seed);
        case ShapeKind::Sphere: return generate_sphere(spec.n, spec.seed);
    }
    throw Error("unreachable shape kind");
}

ShapeKind shape_kind_from_name(const std::string& name) {
    if (name == "cube") return ShapeKind::Cube;
    if (name == "cone") return ShapeKind::Cone;
    if (name == "sphere") return ShapeKind::Sphere;
    throw FormatError("unknown shape '" + name + "' (expected cube|cone|sphere)");
}

std::string shape_kind_name(ShapeKind kind) {
    switch (kind) {
        case ShapeKind::Cube: return "cube";
        case ShapeKind::Cone: return "cone";
        case ShapeKind::Sphere: return "sphere";
    }
    return "?";
}

}  // namespace geocloud
