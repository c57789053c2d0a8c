#include "hyrf/renderer.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "hyrf/error.hpp"
#include "hyrf/parallel.hpp"

namespace hyrf {

namespace {

constexpr double kMinCovDeterminant = 1e-12;

double max_eigenvalue(const Eigen::Matrix2d& m) {
    const double mid = 0.5 * (m(0, 0) + m(1, 1));
    const double half_diff = 0.5 * (m(0, 0) - m(1, 1));
    return mid + std::sqrt(half_diff * half_diff + m(0, 1) * m(1, 0));
}

}  // namespace

CullResult precull(std::span<const double> positions, const Camera& cam, double tol) {
    if (!(tol >= 0.0)) throw InvalidInput("precull: tolerance must be non-negative");
    const std::size_t n = positions.size() / 3;
    CullResult out;
    out.keep_mask.assign(n, 0);
    const double bound = 1.0 + tol;
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::Vector3d p(positions[3 * i], positions[3 * i + 1], positions[3 * i + 2]);
        const Eigen::Vector3d c = cam.world_to_camera(p);
        if (c.z() <= cam.near) continue;
        const double u = cam.fx * c.x() / c.z() + cam.cx;
        const double v = cam.fy * c.y() / c.z() + cam.cy;
        const double ndc_x = 2.0 * u / cam.width - 1.0;
        const double ndc_y = 2.0 * v / cam.height - 1.0;
        if (std::abs(ndc_x) <= bound && std::abs(ndc_y) <= bound) {
            out.keep_mask[i] = 1;
            out.kept_indices.push_back(static_cast<std::uint32_t>(i));
        }
    }
    return out;
}

RenderTarget rasterize(std::span<const ActivatedGaussian> gaussians, const Camera& cam, int threads,
                       RasterCache* cache) {
    RasterCache local;
    RasterCache& c = cache ? *cache : local;
    c.splat_of.assign(gaussians.size(), -1);
    c.source.clear();
    c.projections.clear();
    c.splats.clear();
    c.skipped_singular = 0;
    for (std::size_t i = 0; i < gaussians.size(); ++i) {
        const ActivatedGaussian& g = gaussians[i];
        const Eigen::Matrix3d cov3d = covariance_3d(g.scale, g.rotation);
        auto proj = project_gaussian(g.position, cov3d, cam);
        if (!proj) continue;
        const double det = proj->cov2d.determinant();
        if (!(det >= kMinCovDeterminant)) {
            ++c.skipped_singular;
            continue;
        }
        Splat s;
        s.mean = proj->mean2d;
        s.conic = proj->cov2d.inverse();
        s.opacity = g.opacity;
        s.color = g.color;
        s.depth = proj->depth;
        s.radius = splat_radius(g.opacity, max_eigenvalue(proj->cov2d));
        c.splat_of[i] = static_cast<int>(c.splats.size());
        c.source.push_back(static_cast<std::uint32_t>(i));
        c.projections.push_back(*proj);
        c.splats.push_back(s);
    }
    RenderTarget out = blend_forward(c.splats, cam.width, cam.height, threads, &c.blend);
    c.valid = true;
    return out;
}

RasterGrad rasterize_backward(std::span<const ActivatedGaussian> gaussians, const Camera& cam,
                              const RasterCache& cache, const Image& grad_color,
                              const Image* background, int threads) {
    if (!cache.valid || cache.splat_of.size() != gaussians.size()) {
        throw ContractViolation("rasterize_backward: cache does not match the inputs");
    }
    const std::vector<SplatGrad> sg =
        blend_backward(cache.splats, cache.blend, grad_color, background, threads);

    RasterGrad out;
    out.gaussians.assign(gaussians.size(), ActivatedGrad{});
    out.mean2d.assign(gaussians.size(), Eigen::Vector2d::Zero());
    out.visible.assign(gaussians.size(), 0);
    for (std::size_t k = 0; k < cache.splats.size(); ++k) {
        const std::uint32_t i = cache.source[k];
        const ActivatedGaussian& g = gaussians[i];
        const Splat& s = cache.splats[k];
        ActivatedGrad& ag = out.gaussians[i];
        ag.opacity = sg[k].opacity;
        ag.color = sg[k].color;
        out.mean2d[i] = sg[k].mean;
        out.visible[i] = s.radius > 0.0 ? 1 : 0;

        const Eigen::Matrix2d grad_cov2d = -s.conic.transpose() * sg[k].conic * s.conic.transpose();
        const ProjectionGrad pg =
            project_gaussian_backward(cache.projections[k], cam, sg[k].mean, grad_cov2d);
        const CovarianceGrad cg = covariance_3d_backward(g.scale, g.rotation, pg.cov3d);
        ag.position = pg.mean;
        ag.scale = cg.scale;
        ag.rotation = cg.rotation;
    }
    return out;
}

Eigen::Vector3d shade_background(const Ray& ray, const BackgroundField& bg,
                                 DecoderCache* decoder_cache, Eigen::Vector3d* hash_input,
                                 Eigen::Vector3d* raw_color) {
    // The sphere lives in AABB-normalized coordinates.
    Ray local;
    local.origin = normalize_to_aabb(ray.origin, bg.aabb);
    local.direction = ray.direction.cwiseQuotient(bg.aabb.half_extent()).normalized();
    const RayHit hit = ray_sphere_intersect(local, bg.sphere_radius);
    const Eigen::Vector3d pc = contract(hit.point);

    const int n_feat = bg.radiance->output_dim();
    const int n_dir = direction_encoding_dim(bg.direction_frequencies);
    std::vector<double> input(n_feat + n_dir);
    bg.radiance->encode(pc, std::span<double>(input.data(), n_feat));
    encode_unit_direction(ray.direction, bg.direction_frequencies,
                          std::span<double>(input.data() + n_feat, n_dir));
    double raw[3];
    bg.color_decoder->forward(input, raw, decoder_cache);
    if (hash_input) *hash_input = pc;
    if (raw_color) *raw_color = {raw[0], raw[1], raw[2]};
    return {bounded_sigmoid(raw[0]), bounded_sigmoid(raw[1]), bounded_sigmoid(raw[2])};
}

Image composite_background(const RenderTarget& fg, const Camera& cam, const BackgroundField& bg,
                           int threads, BackgroundCache* cache) {
    if (!bg.radiance || !bg.color_decoder) {
        throw InvalidInput("composite_background: radiance field and color decoder are required");
    }
    const int w = fg.color.width, h = fg.color.height;
    if (w != cam.width || h != cam.height) {
        throw InvalidInput("composite_background: render target does not match the camera");
    }
    BackgroundCache local;
    BackgroundCache& c = cache ? *cache : local;
    c.color = Image(w, h, 3, 0.0);
    c.pixels.clear();
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (fg.transmittance.at(x, y) > bg.tau_t) {
                c.pixels.push_back(static_cast<std::uint32_t>(y * w + x));
            }
        }
    }
    const std::size_t n = c.pixels.size();
    c.hash_inputs.assign(n, Eigen::Vector3d::Zero());
    c.raw.assign(n, Eigen::Vector3d::Zero());
    if (cache) c.decoder.assign(n, DecoderCache{});

    Image out = fg.color;
    parallel_for(static_cast<int>(n), threads, [&](int b, int e, int) {
        for (int k = b; k < e; ++k) {
            const int x = c.pixels[k] % w, y = c.pixels[k] / w;
            const Eigen::Vector3d cs =
                shade_background(cam.pixel_ray(x, y), bg, cache ? &c.decoder[k] : nullptr,
                                 &c.hash_inputs[k], &c.raw[k]);
            const double t = fg.transmittance.at(x, y);
            for (int ch = 0; ch < 3; ++ch) {
                c.color.at(x, y, ch) = cs[ch];
                out.at(x, y, ch) += t * cs[ch];
            }
        }
    });
    c.valid = cache != nullptr;
    return out;
}

void background_backward(const BackgroundCache& cache, const Image& grad_final,
                         const Image& transmittance, HashField& radiance, DecoderNet& color_decoder,
                         int threads) {
    if (!cache.valid || cache.decoder.size() != cache.pixels.size()) {
        throw ContractViolation("background_backward: no cached forward pass");
    }
    const int w = cache.color.width;
    const std::size_t n = cache.pixels.size();
    const int n_in = color_decoder.input_dim();
    const int n_feat = radiance.output_dim();
    const int workers = effective_workers(static_cast<int>(n), threads);
    std::vector<std::vector<double>> param_grads(
        workers, std::vector<double>(color_decoder.params().size(), 0.0));
    std::vector<double> feature_grads(n * n_feat, 0.0);
    std::vector<std::uint8_t> active(n, 0);

    const DecoderNet& net = color_decoder;
    parallel_for(static_cast<int>(n), threads, [&](int b, int e, int worker) {
        std::vector<double> input_grad(n_in);
        for (int k = b; k < e; ++k) {
            const int x = cache.pixels[k] % w, y = cache.pixels[k] / w;
            const double t = transmittance.at(x, y);
            double upstream[3];
            bool any = false;
            for (int ch = 0; ch < 3; ++ch) {
                const double cs = cache.color.at(x, y, ch);
                const double raw = cache.raw[k][ch];
                const bool flat = raw <= -kLogitClamp || raw >= kLogitClamp;
                upstream[ch] = flat ? 0.0 : grad_final.at(x, y, ch) * t * cs * (1.0 - cs);
                any = any || upstream[ch] != 0.0;
            }
            if (!any) continue;
            net.backward(cache.decoder[k], upstream, param_grads[worker], input_grad);
            std::copy(input_grad.begin(), input_grad.begin() + n_feat,
                      feature_grads.begin() + std::size_t(k) * n_feat);
            active[k] = 1;
        }
    });

    auto grads = color_decoder.grads();
    for (const auto& pg : param_grads) {
        for (std::size_t i = 0; i < grads.size(); ++i) grads[i] += pg[i];
    }
    for (std::size_t k = 0; k < n; ++k) {
        if (!active[k]) continue;
        radiance.backward(cache.hash_inputs[k],
                          std::span<const double>(feature_grads.data() + k * n_feat, n_feat));
    }
}

}  // namespace hyrf
