#include "hyrf/camera.hpp"

#include <Eigen/Dense>

#include "hyrf/error.hpp"

namespace hyrf {

void Camera::validate() const {
    if (!(fx > 0.0 && fy > 0.0)) throw InvalidInput("camera focal lengths must be positive");
    if (width <= 0 || height <= 0) throw InvalidInput("camera resolution must be positive");
    if (!(near > 0.0)) throw InvalidInput("camera near plane must be positive");
    const Eigen::Matrix3d should_be_identity = rotation.transpose() * rotation;
    if (!should_be_identity.isApprox(Eigen::Matrix3d::Identity(), 1e-6) ||
        std::abs(rotation.determinant() - 1.0) > 1e-6) {
        throw InvalidInput("camera rotation must be a proper rotation matrix");
    }
}

Ray Camera::pixel_ray(int px, int py) const {
    const Eigen::Vector3d dir_cam{(px + 0.5 - cx) / fx, (py + 0.5 - cy) / fy, 1.0};
    Ray ray;
    ray.origin = center();
    ray.direction = (rotation.transpose() * dir_cam).normalized();
    return ray;
}

Camera Camera::look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
                       const Eigen::Vector3d& up, double fov_x, int width, int height, double near) {
    const Eigen::Vector3d forward = (target - eye).normalized();
    // Image y grows downward, so the camera y axis points along -up.
    Eigen::Vector3d right = forward.cross(up);
    if (right.norm() < 1e-12) throw InvalidInput("look_at: up vector is parallel to view direction");
    right.normalize();
    const Eigen::Vector3d down = forward.cross(right);
    Camera cam;
    cam.rotation.row(0) = right.transpose();
    cam.rotation.row(1) = down.transpose();
    cam.rotation.row(2) = forward.transpose();
    cam.translation = -cam.rotation * eye;
    cam.fx = 0.5 * width / std::tan(0.5 * fov_x);
    cam.fy = cam.fx;
    cam.cx = 0.5 * width;
    cam.cy = 0.5 * height;
    cam.width = width;
    cam.height = height;
    cam.near = near;
    return cam;
}

}  // namespace hyrf
