#pragma once

#include <string>

#include "geocloud/point_cloud.hpp"

namespace geocloud {

enum class PlyFormat { Ascii, BinaryLittleEndian };

/// Parsed PLY metadata for the vertex element.
struct PlyDocument {
    PlyFormat format = PlyFormat::Ascii;
    std::size_t vertex_count = 0;
};

/// Reads x/y/z vertex coordinates from an ASCII or binary little-endian PLY.
/// Extra vertex properties and non-vertex elements (faces etc.) are skipped
/// with a warning on stderr. float and double properties are both accepted.
PointCloud load_ply(const std::string& path);

/// Writes a 3D cloud as PLY. ASCII emits 9 significant digits; binary stores
/// doubles so the round trip is exact.
void write_ply(const PointCloud& cloud, const std::string& path,
               PlyFormat format = PlyFormat::Ascii);

}  // namespace geocloud
