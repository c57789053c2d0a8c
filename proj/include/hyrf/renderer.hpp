#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "hyrf/camera.hpp"
#include "hyrf/decoder.hpp"
#include "hyrf/gaussians.hpp"
#include "hyrf/hash_field.hpp"
#include "hyrf/splat.hpp"

namespace hyrf {

struct CullResult {
    std::vector<std::uint8_t> keep_mask;
    std::vector<std::uint32_t> kept_indices;
};

/// Frustum pre-culling on raw positions (3N, xyz interleaved). Points at or in
/// front of the near plane are dropped; survivors are kept when their NDC
/// coordinates satisfy |x| <= 1 + tol and |y| <= 1 + tol.
CullResult precull(std::span<const double> positions, const Camera& cam, double tol);

/// Projection state of one rasterize call, reused by the backward pass.
struct RasterCache {
    std::vector<int> splat_of;  ///< splat index per input Gaussian, -1 if dropped
    std::vector<std::uint32_t> source;  ///< input Gaussian per splat
    std::vector<ProjectedGaussian> projections;  ///< per splat
    std::vector<Splat> splats;
    BlendCache blend;
    std::size_t skipped_singular = 0;
    bool valid = false;
};

/// Projects and alpha-blends activated Gaussians front to back.
RenderTarget rasterize(std::span<const ActivatedGaussian> gaussians, const Camera& cam,
                       int threads = 1, RasterCache* cache = nullptr);

struct RasterGrad {
    std::vector<ActivatedGrad> gaussians;
    /// dL/d(mean2d) in pixels, per input Gaussian (zero when not rendered).
    std::vector<Eigen::Vector2d> mean2d;
    std::vector<std::uint8_t> visible;
};

RasterGrad rasterize_backward(std::span<const ActivatedGaussian> gaussians, const Camera& cam,
                              const RasterCache& cache, const Image& grad_color,
                              const Image* background, int threads = 1);

/// The pieces of the model that shade the background sphere.
struct BackgroundField {
    const HashField* radiance = nullptr;
    const DecoderNet* color_decoder = nullptr;
    Aabb aabb;
    int direction_frequencies = 4;
    double sphere_radius = 100.0;
    /// Pixels with transmittance at or below this keep their foreground color.
    double tau_t = 0.2;
};

struct BackgroundCache {
    /// Background color per pixel (zero where skipped); also the color
    /// composited behind the splats for the backward pass.
    Image color;
    std::vector<std::uint32_t> pixels;         ///< shaded pixel indices, row-major
    std::vector<Eigen::Vector3d> hash_inputs;  ///< contracted sphere hits
    std::vector<DecoderCache> decoder;
    std::vector<Eigen::Vector3d> raw;
    bool valid = false;
};

/// Shades the background sphere for pixels with T > tau_t and returns
/// C = C_fg + T * c_s per pixel.
Image composite_background(const RenderTarget& fg, const Camera& cam, const BackgroundField& bg,
                           int threads = 1, BackgroundCache* cache = nullptr);

/// Background color of a single pixel ray (no transmittance weighting).
Eigen::Vector3d shade_background(const Ray& ray, const BackgroundField& bg,
                                 DecoderCache* decoder_cache = nullptr,
                                 Eigen::Vector3d* hash_input = nullptr,
                                 Eigen::Vector3d* raw_color = nullptr);

/// Accumulates radiance-field and color-decoder gradients for the shaded
/// pixels given dL/d(final image) and the foreground transmittance.
void background_backward(const BackgroundCache& cache, const Image& grad_final,
                         const Image& transmittance, HashField& radiance, DecoderNet& color_decoder,
                         int threads = 1);

}  // namespace hyrf
