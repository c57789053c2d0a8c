#include "hyrf/geometry.hpp"

#include <limits>
#include <sstream>

#include <Eigen/Dense>

#include "hyrf/camera.hpp"
#include "hyrf/error.hpp"

namespace hyrf {

void Aabb::validate() const {
    if (!min_corner.allFinite() || !max_corner.allFinite()) {
        throw InvalidInput("AABB corners must be finite");
    }
    for (int k = 0; k < 3; ++k) {
        if (!(min_corner[k] < max_corner[k])) {
            std::ostringstream os;
            os << "degenerate AABB on axis " << k << ": [" << min_corner[k] << ", " << max_corner[k]
               << "]";
            throw InvalidInput(os.str());
        }
    }
}

double Quaternion::norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }

Quaternion Quaternion::normalized() const {
    const double n = norm();
    if (n == 0.0) {
        throw InvalidInput("cannot normalize a zero quaternion");
    }
    return {w / n, x / n, y / n, z / n};
}

Eigen::Vector3d normalize_to_aabb(const Eigen::Vector3d& p, const Aabb& box) {
    box.validate();
    return (p - box.center()).cwiseQuotient(box.half_extent());
}

namespace {

// Keeps the far-field limit (|p| -> inf) strictly inside the open cube.
double open_unit(double v) {
    constexpr double lo = std::numeric_limits<double>::min();
    const double hi = std::nextafter(1.0, 0.0);
    return std::clamp(v, lo, hi);
}

}  // namespace

Eigen::Vector3d contract(const Eigen::Vector3d& p) {
    const double n = p.norm();
    Eigen::Vector3d out;
    if (n <= 1.0) {
        out = 0.25 * p + Eigen::Vector3d::Constant(0.5);
    } else {
        out = 0.25 * (2.0 - 1.0 / n) * (p / n) + Eigen::Vector3d::Constant(0.5);
    }
    return out.unaryExpr(&open_unit);
}

Eigen::Matrix3d contract_jacobian(const Eigen::Vector3d& p) {
    const double n = p.norm();
    if (n <= 1.0) {
        return 0.25 * Eigen::Matrix3d::Identity();
    }
    // f(p) = 0.25 (2/n - 1/n^2) p
    const double a = 2.0 / n - 1.0 / (n * n);
    const double da_dn = -2.0 / (n * n) + 2.0 / (n * n * n);
    return 0.25 * (a * Eigen::Matrix3d::Identity() + (da_dn / n) * p * p.transpose());
}

RayHit ray_sphere_intersect(const Ray& ray, double radius) {
    const Eigen::Vector3d& o = ray.origin;
    const Eigen::Vector3d& d = ray.direction;
    const double a = d.dot(d);
    const double b = 2.0 * o.dot(d);
    const double c = o.dot(o) - radius * radius;
    if (!(c < 0.0)) {
        std::ostringstream os;
        os << "ray origin (norm " << o.norm() << ") is not inside the background sphere of radius "
           << radius;
        throw ConfigError(os.str());
    }
    // c < 0 gives one root of each sign; pick the positive one without cancellation.
    const double disc = std::sqrt(b * b - 4.0 * a * c);
    const double q = -0.5 * (b + std::copysign(disc, b));
    const double t = (b >= 0.0) ? c / q : q / a;
    RayHit hit;
    hit.t = t;
    hit.point = o + t * d;
    return hit;
}

Eigen::Matrix3d quat_to_rotation(const Quaternion& raw) {
    const Quaternion q = raw.normalized();
    const double w = q.w, x = q.x, y = q.y, z = q.z;
    Eigen::Matrix3d r;
    r << 1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y),
        2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x),
        2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y);
    return r;
}

Eigen::Vector4d quat_to_rotation_backward(const Quaternion& q, const Eigen::Matrix3d& g) {
    const double w = q.w, x = q.x, y = q.y, z = q.z;
    Eigen::Matrix3d dw, dx, dy, dz;
    dw << 0, -2 * z, 2 * y, 2 * z, 0, -2 * x, -2 * y, 2 * x, 0;
    dx << 0, 2 * y, 2 * z, 2 * y, -4 * x, -2 * w, 2 * z, 2 * w, -4 * x;
    dy << -4 * y, 2 * x, 2 * w, 2 * x, 0, 2 * z, -2 * w, 2 * z, -4 * y;
    dz << -4 * z, -2 * w, 2 * x, 2 * w, -4 * z, 2 * y, 2 * x, 2 * y, 0;
    return {g.cwiseProduct(dw).sum(), g.cwiseProduct(dx).sum(), g.cwiseProduct(dy).sum(),
            g.cwiseProduct(dz).sum()};
}

Eigen::Matrix3d covariance_3d(const Eigen::Vector3d& scale, const Quaternion& q) {
    if (!(scale.array() > 0.0).all()) {
        throw InvalidInput("covariance_3d: scales must be positive");
    }
    const Eigen::Matrix3d m = quat_to_rotation(q) * scale.asDiagonal();
    return m * m.transpose();
}

CovarianceGrad covariance_3d_backward(const Eigen::Vector3d& scale, const Quaternion& q,
                                      const Eigen::Matrix3d& grad_cov) {
    const Quaternion qn = q.normalized();
    const Eigen::Matrix3d rot = quat_to_rotation(qn);
    const Eigen::Matrix3d m = rot * scale.asDiagonal();
    const Eigen::Matrix3d grad_m = (grad_cov + grad_cov.transpose()) * m;
    CovarianceGrad out;
    out.scale = (rot.transpose() * grad_m).diagonal();
    out.rotation = quat_to_rotation_backward(qn, grad_m * scale.asDiagonal());
    return out;
}

std::optional<ProjectedGaussian> project_gaussian(const Eigen::Vector3d& mean,
                                                  const Eigen::Matrix3d& cov3d, const Camera& cam) {
    const Eigen::Vector3d t = cam.world_to_camera(mean);
    if (t.z() <= cam.near) {
        return std::nullopt;
    }
    ProjectedGaussian out;
    out.mean_cam = t;
    out.depth = t.z();
    const double inv_z = 1.0 / t.z();
    out.mean2d = {cam.fx * t.x() * inv_z + cam.cx, cam.fy * t.y() * inv_z + cam.cy};
    auto& j = out.jacobian;
    j << cam.fx * inv_z, 0.0, -cam.fx * t.x() * inv_z * inv_z, 0.0, cam.fy * inv_z,
        -cam.fy * t.y() * inv_z * inv_z;
    out.cov_cam = cam.rotation * cov3d * cam.rotation.transpose();
    out.cov2d = j * out.cov_cam * j.transpose();
    out.cov2d += kLowPassVariance * Eigen::Matrix2d::Identity();
    return out;
}

ProjectionGrad project_gaussian_backward(const ProjectedGaussian& proj, const Camera& cam,
                                         const Eigen::Vector2d& grad_mean2d,
                                         const Eigen::Matrix2d& grad_cov2d) {
    const auto& j = proj.jacobian;
    const Eigen::Matrix3d& m = proj.cov_cam;
    const Eigen::Matrix3d grad_m = j.transpose() * grad_cov2d * j;
    const Eigen::Matrix<double, 2, 3> grad_j = grad_cov2d * j * m.transpose() +
                                               grad_cov2d.transpose() * j * m;

    const double tx = proj.mean_cam.x(), ty = proj.mean_cam.y(), tz = proj.mean_cam.z();
    const double iz = 1.0 / tz, iz2 = iz * iz, iz3 = iz2 * iz;
    const double fx = cam.fx, fy = cam.fy;
    Eigen::Vector3d grad_t;
    grad_t.x() = grad_j(0, 2) * (-fx * iz2) + grad_mean2d.x() * fx * iz;
    grad_t.y() = grad_j(1, 2) * (-fy * iz2) + grad_mean2d.y() * fy * iz;
    grad_t.z() = grad_j(0, 0) * (-fx * iz2) + grad_j(0, 2) * (2.0 * fx * tx * iz3) +
                 grad_j(1, 1) * (-fy * iz2) + grad_j(1, 2) * (2.0 * fy * ty * iz3) +
                 grad_mean2d.x() * (-fx * tx * iz2) + grad_mean2d.y() * (-fy * ty * iz2);

    ProjectionGrad out;
    out.mean = cam.rotation.transpose() * grad_t;
    out.cov3d = cam.rotation.transpose() * grad_m * cam.rotation;
    return out;
}

double logit(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw InvalidInput("logit: argument must lie in (0, 1)");
    }
    return std::log(p / (1.0 - p));
}

}  // namespace hyrf
