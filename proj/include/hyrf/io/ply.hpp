#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

namespace hyrf::io {

struct PointCloud {
    std::vector<Eigen::Vector3d> positions;
    /// In [0, 1]; mid-gray when the file has no color properties.
    std::vector<Eigen::Vector3d> colors;
};

/// Vertex element of an ascii or binary_little_endian PLY: x/y/z plus
/// optional red/green/blue (uchar scaled by 1/255, or float as is).
/// Other properties and elements are skipped.
PointCloud read_ply(const std::string& path);

/// Binary little-endian PLY with float x/y/z and uchar red/green/blue.
void write_ply(const std::string& path, const PointCloud& cloud);

}  // namespace hyrf::io
