#include "hyrf/pipeline.hpp"

#include <numeric>

#include "hyrf/error.hpp"

namespace hyrf {

ActivatedGaussian activate_gaussian(const HyrfModel& model, std::size_t i,
                                    const Eigen::Vector3d& cam_pos, GaussianTrace* trace) {
    const ExplicitRecord ex = model.gaussians.record(i);
    const Eigen::Vector3d pc = field_coordinates(ex.position, model.config.aabb);

    std::vector<double> geo_feat(model.geometry.output_dim());
    model.geometry.encode(pc, geo_feat);
    const RawGeometry geo =
        decode_geometry(geo_feat, model.geometry_decoder, trace ? &trace->geometry_cache : nullptr);

    std::vector<double> rad_feat(model.radiance.output_dim());
    model.radiance.encode(pc, rad_feat);
    const std::vector<double> dir =
        encode_direction(ex.position, cam_pos, model.config.direction_frequencies);
    const RawColor col =
        decode_color(rad_feat, dir, model.color_decoder, trace ? &trace->color_cache : nullptr);

    if (trace) {
        trace->index = static_cast<std::uint32_t>(i);
        trace->field_input = pc;
        trace->raw_geometry = geo;
        trace->raw_color = col;
    }
    return aggregate(geo, col, ex, model.config.s_max);
}

std::vector<ActivatedGaussian> activate_geometry(const HyrfModel& model) {
    const std::size_t n = model.gaussians.size();
    std::vector<ActivatedGaussian> out(n);
    std::vector<double> feat(model.geometry.output_dim());
    const RawColor no_color;
    for (std::size_t i = 0; i < n; ++i) {
        const ExplicitRecord ex = model.gaussians.record(i);
        model.geometry.encode(field_coordinates(ex.position, model.config.aabb), feat);
        const RawGeometry geo = decode_geometry(feat, model.geometry_decoder);
        out[i] = aggregate(geo, no_color, ex, model.config.s_max);
    }
    return out;
}

BackgroundField background_field(const HyrfModel& model, const RenderOptions& opts) {
    BackgroundField bg;
    bg.radiance = &model.radiance;
    bg.color_decoder = &model.color_decoder;
    bg.aabb = model.config.aabb;
    bg.direction_frequencies = model.config.direction_frequencies;
    bg.sphere_radius = model.config.sphere_radius;
    bg.tau_t = opts.tau_t.value_or(model.config.tau_t);
    return bg;
}

FrameResult render_frame(const HyrfModel& model, const Camera& cam, const RenderOptions& opts,
                         FrameCache* cache) {
    FrameCache local;
    FrameCache& c = cache ? *cache : local;
    const std::size_t n = model.gaussians.size();

    std::vector<std::uint32_t> kept;
    if (opts.cull) {
        kept = precull(model.gaussians.positions.value, cam, opts.cull_tolerance).kept_indices;
    } else {
        kept.resize(n);
        std::iota(kept.begin(), kept.end(), 0u);
    }

    FrameResult result;
    const Eigen::Vector3d cam_pos = cam.center();
    c.traces.assign(kept.size(), GaussianTrace{});
    c.activated.resize(kept.size());
    for (std::size_t k = 0; k < kept.size(); ++k) {
        c.activated[k] = activate_gaussian(model, kept[k], cam_pos, cache ? &c.traces[k] : nullptr);
        c.traces[k].index = kept[k];
        if (c.activated[k].rotation_fallback) ++result.stats.rotation_fallbacks;
    }
    result.stats.kept = kept.size();

    c.foreground = rasterize(c.activated, cam, opts.threads, &c.raster);
    result.stats.rendered = c.raster.splats.size();
    result.foreground = c.foreground;
    c.has_background = opts.background;
    if (opts.background) {
        result.image = composite_background(c.foreground, cam, background_field(model, opts),
                                            opts.threads, cache ? &c.background : nullptr);
        result.stats.background_pixels = cache ? c.background.pixels.size() : 0;
    } else {
        result.image = c.foreground.color;
    }
    c.valid = cache != nullptr;
    return result;
}

void backward_frame(HyrfModel& model, const Camera& cam, const FrameCache& cache,
                    const Image& grad_image, const RenderOptions& opts) {
    if (!cache.valid) throw ContractViolation("backward_frame: no cached forward pass");
    if (grad_image.width != cam.width || grad_image.height != cam.height ||
        grad_image.channels != 3) {
        throw InvalidInput("backward_frame: gradient image does not match the camera");
    }
    const Image* behind = nullptr;
    if (cache.has_background) {
        behind = &cache.background.color;
        background_backward(cache.background, grad_image, cache.foreground.transmittance,
                            model.radiance, model.color_decoder, opts.threads);
    }
    const RasterGrad rg = rasterize_backward(cache.activated, cam, cache.raster, grad_image, behind,
                                             opts.threads);

    auto& gs = model.gaussians;
    const Eigen::Vector3d cam_pos = cam.center();
    const Eigen::Vector3d inv_half = model.config.aabb.half_extent().cwiseInverse();
    const int n_geo = model.geometry.output_dim();
    const int n_rad = model.radiance.output_dim();
    const int n_dir = direction_encoding_dim(model.config.direction_frequencies);
    std::vector<double> geo_in_grad(n_geo);
    std::vector<double> col_in_grad(model.color_decoder.input_dim());

    for (std::size_t k = 0; k < cache.traces.size(); ++k) {
        const GaussianTrace& tr = cache.traces[k];
        const std::size_t i = tr.index;
        const ExplicitRecord ex = gs.record(i);
        const ActivatedGrad& ag = rg.gaussians[k];
        const AggregateGrad agg =
            aggregate_backward(tr.raw_geometry, tr.raw_color, ex, model.config.s_max, ag);

        for (int c = 0; c < 3; ++c) gs.colors.grad[3 * i + c] += agg.color[c];
        gs.scales.grad[i] += agg.scale;
        gs.opacities.grad[i] += agg.opacity;

        Eigen::Vector3d grad_pc = Eigen::Vector3d::Zero();
        Eigen::Vector3d grad_p = ag.position;

        bool geo_any = false;
        for (double v : agg.raw_geometry) geo_any = geo_any || v != 0.0;
        if (geo_any) {
            model.geometry_decoder.backward(tr.geometry_cache, agg.raw_geometry, geo_in_grad);
            grad_pc += model.geometry.backward(tr.field_input, geo_in_grad);
        }
        bool col_any = false;
        for (double v : agg.raw_color) col_any = col_any || v != 0.0;
        if (col_any) {
            model.color_decoder.backward(tr.color_cache, agg.raw_color, col_in_grad);
            grad_pc += model.radiance.backward(
                tr.field_input, std::span<const double>(col_in_grad.data(), n_rad));
            grad_p += encode_direction_backward(
                ex.position, cam_pos, model.config.direction_frequencies,
                std::span<const double>(col_in_grad.data() + n_rad, n_dir));
        }
        if (!grad_pc.isZero(0.0)) {
            const Eigen::Vector3d pn = normalize_to_aabb(ex.position, model.config.aabb);
            grad_p += inv_half.cwiseProduct(contract_jacobian(pn).transpose() * grad_pc);
        }
        for (int c = 0; c < 3; ++c) gs.positions.grad[3 * i + c] += grad_p[c];

        if (rg.visible[k]) {
            const Eigen::Vector2d ndc(rg.mean2d[k].x() * 0.5 * cam.width,
                                      rg.mean2d[k].y() * 0.5 * cam.height);
            gs.grad_accum[i] += ndc.norm();
            gs.grad_count[i] += 1;
        }
    }
}

}  // namespace hyrf
