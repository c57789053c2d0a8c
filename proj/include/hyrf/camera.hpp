#pragma once

#include <Eigen/Core>

#include "hyrf/geometry.hpp"

namespace hyrf {

/// Pinhole camera. World to camera is `p_cam = rotation * p + translation`,
/// +z looks forward, pixel (i, j) has its center at (i + 0.5, j + 0.5).
struct Camera {
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.5;
    double cy = 0.5;
    int width = 1;
    int height = 1;
    double near = 0.2;

    /// Throws InvalidInput when the intrinsics or extrinsics are unusable.
    void validate() const;

    Eigen::Vector3d world_to_camera(const Eigen::Vector3d& p) const {
        return rotation * p + translation;
    }

    Eigen::Vector3d center() const { return -rotation.transpose() * translation; }

    /// World-space ray through the center of pixel (px, py).
    Ray pixel_ray(int px, int py) const;

    /// Camera looking from `eye` at `target`; `up` is the approximate world up.
    static Camera look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
                          const Eigen::Vector3d& up, double fov_x, int width, int height,
                          double near = 0.2);
};

}  // namespace hyrf
