#pragma once

#include <cstdint>
#include <string>

#include "geocloud/point_cloud.hpp"

namespace geocloud {

enum class ShapeKind { Cube, Cone, Sphere };

struct ShapeSpec {
    ShapeKind kind = ShapeKind::Cube;
    std::size_t n = 2048;
    std::uint64_t seed = 0;
};

/// Solid unit cube: each coordinate uniform on [-0.5, 0.5].
PointCloud generate_cube(std::size_t n, std::uint64_t seed);

/// Cone surface with apex (0,0,2) and base circle of radius 1 at z=0:
/// theta uniform on [0,2pi), h uniform on [0,2], r = 1 - h/2.
PointCloud generate_cone(std::size_t n, std::uint64_t seed);

/// Unit sphere with theta uniform on [0,2pi) and phi uniform on [0,pi].
/// Note this is not area-uniform; density concentrates at the poles.
PointCloud generate_sphere(std::size_t n, std::uint64_t seed);

PointCloud generate_shape(const ShapeSpec& spec);

ShapeKind shape_kind_from_name(const std::string& name);
std::string shape_kind_name(ShapeKind kind);

}  // namespace geocloud
