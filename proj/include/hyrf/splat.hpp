#pragma once

// Screen-space alpha blending of projected Gaussians, forward and backward.

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "hyrf/image.hpp"

namespace hyrf {

/// Per-Gaussian opacity after the kernel is clipped to this value.
inline constexpr double kAlphaMax = 0.99;
/// Kernel contributions below this are skipped.
inline constexpr double kAlphaMin = 1.0 / 255.0;
/// A pixel stops compositing before its transmittance would drop below this.
inline constexpr double kTransmittanceMin = 1e-4;

/// A Gaussian after projection: everything the blender needs.
struct Splat {
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    /// Inverse of the 2D covariance.
    Eigen::Matrix2d conic = Eigen::Matrix2d::Identity();
    double opacity = 0.0;
    Eigen::Vector3d color = Eigen::Vector3d::Zero();
    double depth = 0.0;
    /// Half-width (px) of the square outside which opacity * kernel < kAlphaMin.
    double radius = 0.0;
};

/// Support radius for a splat of `opacity` whose covariance has largest
/// eigenvalue `max_eigenvalue`; zero when the splat is invisible everywhere.
double splat_radius(double opacity, double max_eigenvalue);

struct RenderTarget {
    Image color;          ///< H x W x 3
    Image transmittance;  ///< H x W x 1
};

/// Depth order and tile bins from a forward pass, reused by backward.
struct BlendCache {
    int width = 0;
    int height = 0;
    int tiles_x = 0;
    int tiles_y = 0;
    std::vector<std::uint32_t> order;
    std::vector<std::vector<std::uint32_t>> tile_lists;
    std::size_t n_splats = 0;
    bool valid = false;
};

inline constexpr int kTileSize = 16;

RenderTarget blend_forward(std::span<const Splat> splats, int width, int height, int threads = 1,
                           BlendCache* cache = nullptr);

struct SplatGrad {
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    Eigen::Matrix2d conic = Eigen::Matrix2d::Zero();
    double opacity = 0.0;
    Eigen::Vector3d color = Eigen::Vector3d::Zero();
};

/// Gradients of a loss w.r.t. every splat given dL/d(color image). When
/// `background` is non-empty (H x W x 3) it is the color composited behind
/// the splats with the final transmittance, and its influence on the
/// opacity gradients is included.
std::vector<SplatGrad> blend_backward(std::span<const Splat> splats, const BlendCache& cache,
                                      const Image& grad_color, const Image* background,
                                      int threads = 1);

}  // namespace hyrf
