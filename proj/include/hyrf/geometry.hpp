#pragma once

// Pure math shared by every stage: coordinate normalization, scene
// contraction, quaternion/covariance algebra, EWA projection and the
// background-sphere intersection. All functions are pure.

#include <cmath>
#include <optional>

#include <Eigen/Core>

namespace hyrf {

struct Camera;

struct Aabb {
    Eigen::Vector3d min_corner = -Eigen::Vector3d::Ones();
    Eigen::Vector3d max_corner = Eigen::Vector3d::Ones();

    Eigen::Vector3d center() const { return 0.5 * (min_corner + max_corner); }
    Eigen::Vector3d half_extent() const { return 0.5 * (max_corner - min_corner); }
    double diagonal() const { return (max_corner - min_corner).norm(); }

    /// Throws InvalidInput unless finite and strictly ordered on every axis.
    void validate() const;
};

struct Ray {
    Eigen::Vector3d origin = Eigen::Vector3d::Zero();
    Eigen::Vector3d direction = Eigen::Vector3d::UnitZ();
};

struct Quaternion {
    double w = 1.0;
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    double norm() const;
    Quaternion normalized() const;
    Eigen::Vector4d as_vector() const { return {w, x, y, z}; }
    static Quaternion from_vector(const Eigen::Vector4d& v) { return {v[0], v[1], v[2], v[3]}; }
};

/// Maps the box center to the origin and the half extent to one per axis.
Eigen::Vector3d normalize_to_aabb(const Eigen::Vector3d& p, const Aabb& box);

/// Unbounded space into the open unit cube: `0.25 p + 0.5` inside the unit
/// ball, `0.25 (2 - 1/|p|) p/|p| + 0.5` outside.
Eigen::Vector3d contract(const Eigen::Vector3d& p);

/// d contract / d p, evaluated at `p`.
Eigen::Matrix3d contract_jacobian(const Eigen::Vector3d& p);

struct RayHit {
    double t = 0.0;
    Eigen::Vector3d point = Eigen::Vector3d::Zero();
};

/// Forward intersection with the origin-centered sphere of `radius`.
/// Throws ConfigError when the ray origin is not inside the sphere.
RayHit ray_sphere_intersect(const Ray& ray, double radius);

/// Rotation matrix of a unit quaternion. Throws InvalidInput for a zero quaternion.
Eigen::Matrix3d quat_to_rotation(const Quaternion& q);

/// Gradient of a scalar loss w.r.t. (w, x, y, z), given dL/dR and treating
/// `q` as already normalized.
Eigen::Vector4d quat_to_rotation_backward(const Quaternion& q, const Eigen::Matrix3d& grad_rotation);

/// Sigma = R S S^T R^T. Throws InvalidInput for a non-positive scale.
Eigen::Matrix3d covariance_3d(const Eigen::Vector3d& scale, const Quaternion& q);

struct CovarianceGrad {
    Eigen::Vector3d scale = Eigen::Vector3d::Zero();
    Eigen::Vector4d rotation = Eigen::Vector4d::Zero();
};

/// Backward of covariance_3d for a full (not symmetrized) dL/dSigma.
CovarianceGrad covariance_3d_backward(const Eigen::Vector3d& scale, const Quaternion& q,
                                      const Eigen::Matrix3d& grad_cov);

/// Screen-space low-pass term added to every projected covariance, in px^2.
inline constexpr double kLowPassVariance = 0.3;

struct ProjectedGaussian {
    Eigen::Vector2d mean2d = Eigen::Vector2d::Zero();
    Eigen::Matrix2d cov2d = Eigen::Matrix2d::Identity();
    double depth = 0.0;
    // Kept for the backward pass.
    Eigen::Vector3d mean_cam = Eigen::Vector3d::Zero();
    Eigen::Matrix<double, 2, 3> jacobian = Eigen::Matrix<double, 2, 3>::Zero();
    Eigen::Matrix3d cov_cam = Eigen::Matrix3d::Zero();
};

/// EWA first-order projection. Returns nullopt (culled) when the camera-space
/// depth is at or in front of the near plane.
std::optional<ProjectedGaussian> project_gaussian(const Eigen::Vector3d& mean,
                                                  const Eigen::Matrix3d& cov3d, const Camera& cam);

struct ProjectionGrad {
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    Eigen::Matrix3d cov3d = Eigen::Matrix3d::Zero();
};

ProjectionGrad project_gaussian_backward(const ProjectedGaussian& proj, const Camera& cam,
                                         const Eigen::Vector2d& grad_mean2d,
                                         const Eigen::Matrix2d& grad_cov2d);

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double logit(double p);

}  // namespace hyrf
