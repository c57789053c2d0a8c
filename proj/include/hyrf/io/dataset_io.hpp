#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Core>

#include "hyrf/dataset.hpp"

namespace hyrf::io {

enum class DatasetFormat { Auto, TransformsJson, ColmapText };

DatasetFormat dataset_format_from_string(const std::string& s);

struct LoadOptions {
    DatasetFormat format = DatasetFormat::Auto;
    /// Used when the dataset has no explicit split.
    int test_every = 8;
    double near = 0.2;
    /// Random points drawn inside the camera box when no point cloud exists.
    std::size_t random_points = 2000;
    std::uint64_t seed = 0;
};

/// transforms-json: `transforms.json` (or `transforms_train.json` +
/// `transforms_test.json`) with camera_angle_x, frames[].file_path and
/// frames[].transform_matrix (OpenGL camera-to-world); optional
/// `points3d.ply`. colmap-text: `cameras.txt`, `images.txt`, optional
/// `points3D.txt` under `sparse/0/`, `sparse/` or the root, images in `images/`.
Dataset load_dataset(const std::string& root, const LoadOptions& opts = {});

/// Focal length in pixels for a horizontal field of view.
double focal_from_fov(double fov, int pixels);

/// Camera from an OpenGL-convention (x right, y up, -z forward) camera-to-world matrix.
Camera camera_from_opengl_c2w(const Eigen::Matrix4d& c2w, double fx, double fy, int width,
                              int height, double near);
/// Inverse of camera_from_opengl_c2w.
Eigen::Matrix4d opengl_c2w(const Camera& cam);

}  // namespace hyrf::io
