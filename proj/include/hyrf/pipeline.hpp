#pragma once

// Full hybrid frame: pre-cull -> field queries -> decode -> aggregate ->
// rasterize -> background composite, and the matching backward pass into
// every trainable array of a HyrfModel.

#include <cstddef>
#include <optional>
#include <vector>

#include "hyrf/camera.hpp"
#include "hyrf/model.hpp"
#include "hyrf/renderer.hpp"

namespace hyrf {

struct RenderOptions {
    int threads = 1;
    /// When false every Gaussian in front of the near plane is rendered.
    bool cull = true;
    double cull_tolerance = 0.15;
    bool background = true;
    /// Overrides the model's transmittance threshold when set.
    std::optional<double> tau_t;
};

/// Neural/explicit state of one rendered Gaussian, kept for backward.
struct GaussianTrace {
    std::uint32_t index = 0;
    Eigen::Vector3d field_input = Eigen::Vector3d::Zero();
    RawGeometry raw_geometry;
    RawColor raw_color;
    DecoderCache geometry_cache;
    DecoderCache color_cache;
};

struct FrameCache {
    std::vector<GaussianTrace> traces;
    std::vector<ActivatedGaussian> activated;
    RasterCache raster;
    RenderTarget foreground;
    BackgroundCache background;
    bool has_background = false;
    bool valid = false;
};

struct FrameStats {
    std::size_t kept = 0;
    std::size_t rendered = 0;
    std::size_t rotation_fallbacks = 0;
    std::size_t background_pixels = 0;
};

struct FrameResult {
    Image image;
    RenderTarget foreground;
    FrameStats stats;
};

/// Neural geometry + explicit residuals for Gaussian `i`, with the color
/// decoded for a viewer at `cam_pos`.
ActivatedGaussian activate_gaussian(const HyrfModel& model, std::size_t i,
                                    const Eigen::Vector3d& cam_pos, GaussianTrace* trace = nullptr);

/// View-independent activated geometry of every Gaussian (color left at its
/// default); used by densification and pruning.
std::vector<ActivatedGaussian> activate_geometry(const HyrfModel& model);

FrameResult render_frame(const HyrfModel& model, const Camera& cam, const RenderOptions& opts = {},
                         FrameCache* cache = nullptr);

/// Accumulates dL/d(every parameter) into the model's gradient buffers and,
/// for visible Gaussians, their screen-space gradient statistics.
void backward_frame(HyrfModel& model, const Camera& cam, const FrameCache& cache,
                    const Image& grad_image, const RenderOptions& opts = {});

BackgroundField background_field(const HyrfModel& model, const RenderOptions& opts);

}  // namespace hyrf
