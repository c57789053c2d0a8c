#include "hyrf/splat.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hyrf/error.hpp"
#include "hyrf/parallel.hpp"

namespace hyrf {

double splat_radius(double opacity, double max_eigenvalue) {
    const double ratio = opacity / kAlphaMin;
    if (!(ratio > 1.0) || !(max_eigenvalue > 0.0)) return 0.0;
    return std::sqrt(2.0 * std::log(ratio) * max_eigenvalue);
}

namespace {

struct PixelRange {
    int x0, x1, y0, y1;  // inclusive pixel index bounds
};

// Pixels whose centers lie inside [mean - radius, mean + radius].
bool pixel_range(const Splat& s, int width, int height, PixelRange& r) {
    if (!(s.radius > 0.0)) return false;
    r.x0 = std::max(0, static_cast<int>(std::ceil(s.mean.x() - s.radius - 0.5)));
    r.x1 = std::min(width - 1, static_cast<int>(std::floor(s.mean.x() + s.radius - 0.5)));
    r.y0 = std::max(0, static_cast<int>(std::ceil(s.mean.y() - s.radius - 0.5)));
    r.y1 = std::min(height - 1, static_cast<int>(std::floor(s.mean.y() + s.radius - 0.5)));
    return r.x0 <= r.x1 && r.y0 <= r.y1;
}

struct Contribution {
    std::uint32_t splat;
    double alpha;       // clipped kernel opacity
    double raw_alpha;   // opacity * kernel before clipping
    double kernel;
    double transmittance;  // before this splat
    Eigen::Vector2d delta;
};

// Walks the depth-ordered candidates of one pixel and records every splat
// that composites into it.
template <typename Visit>
double composite_pixel(std::span<const Splat> splats, const std::vector<std::uint32_t>& list, int x,
                       int y, Visit&& visit) {
    const Eigen::Vector2d center(x + 0.5, y + 0.5);
    double t = 1.0;
    for (std::uint32_t idx : list) {
        const Splat& s = splats[idx];
        const Eigen::Vector2d d = center - s.mean;
        if (std::abs(d.x()) > s.radius || std::abs(d.y()) > s.radius) continue;
        const double power = -0.5 * d.dot(s.conic * d);
        if (power > 0.0) continue;
        const double kernel = std::exp(power);
        const double raw = s.opacity * kernel;
        const double alpha = std::min(kAlphaMax, raw);
        if (alpha < kAlphaMin) continue;
        const double next_t = t * (1.0 - alpha);
        if (next_t < kTransmittanceMin) break;
        visit(Contribution{idx, alpha, raw, kernel, t, d});
        t = next_t;
    }
    return t;
}

}  // namespace

RenderTarget blend_forward(std::span<const Splat> splats, int width, int height, int threads,
                           BlendCache* cache) {
    if (width <= 0 || height <= 0) throw InvalidInput("blend: image size must be positive");
    BlendCache local;
    BlendCache& c = cache ? *cache : local;
    c.width = width;
    c.height = height;
    c.tiles_x = (width + kTileSize - 1) / kTileSize;
    c.tiles_y = (height + kTileSize - 1) / kTileSize;
    c.n_splats = splats.size();
    c.order.resize(splats.size());
    std::iota(c.order.begin(), c.order.end(), 0u);
    std::stable_sort(c.order.begin(), c.order.end(), [&](std::uint32_t a, std::uint32_t b) {
        return splats[a].depth < splats[b].depth;
    });
    c.tile_lists.assign(std::size_t(c.tiles_x) * c.tiles_y, {});
    for (std::uint32_t idx : c.order) {
        PixelRange r;
        if (!pixel_range(splats[idx], width, height, r)) continue;
        for (int ty = r.y0 / kTileSize; ty <= r.y1 / kTileSize; ++ty) {
            for (int tx = r.x0 / kTileSize; tx <= r.x1 / kTileSize; ++tx) {
                c.tile_lists[std::size_t(ty) * c.tiles_x + tx].push_back(idx);
            }
        }
    }
    c.valid = true;

    RenderTarget out{Image(width, height, 3, 0.0), Image(width, height, 1, 1.0)};
    parallel_for(height, threads, [&](int y0, int y1, int) {
        for (int y = y0; y < y1; ++y) {
            for (int x = 0; x < width; ++x) {
                const auto& list = c.tile_lists[std::size_t(y / kTileSize) * c.tiles_x + x / kTileSize];
                Eigen::Vector3d color = Eigen::Vector3d::Zero();
                const double t = composite_pixel(splats, list, x, y, [&](const Contribution& k) {
                    color += splats[k.splat].color * (k.alpha * k.transmittance);
                });
                for (int ch = 0; ch < 3; ++ch) out.color.at(x, y, ch) = color[ch];
                out.transmittance.at(x, y) = t;
            }
        }
    });
    return out;
}

std::vector<SplatGrad> blend_backward(std::span<const Splat> splats, const BlendCache& cache,
                                      const Image& grad_color, const Image* background,
                                      int threads) {
    if (!cache.valid || cache.n_splats != splats.size()) {
        throw ContractViolation("blend_backward: cache does not match the splats");
    }
    if (grad_color.width != cache.width || grad_color.height != cache.height ||
        grad_color.channels != 3) {
        throw InvalidInput("blend_backward: gradient image has wrong shape");
    }
    if (background && !background->same_shape(grad_color)) {
        throw InvalidInput("blend_backward: background image has wrong shape");
    }
    const int workers = effective_workers(cache.height, threads);
    std::vector<std::vector<SplatGrad>> partial(workers, std::vector<SplatGrad>(splats.size()));

    parallel_for(cache.height, threads, [&](int y0, int y1, int worker) {
        auto& grads = partial[worker];
        std::vector<Contribution> contribs;
        for (int y = y0; y < y1; ++y) {
            for (int x = 0; x < cache.width; ++x) {
                const Eigen::Vector3d g(grad_color.at(x, y, 0), grad_color.at(x, y, 1),
                                        grad_color.at(x, y, 2));
                if (g.isZero(0.0)) continue;
                const auto& list =
                    cache.tile_lists[std::size_t(y / kTileSize) * cache.tiles_x + x / kTileSize];
                contribs.clear();
                composite_pixel(splats, list, x, y,
                                [&](const Contribution& k) { contribs.push_back(k); });
                Eigen::Vector3d behind = Eigen::Vector3d::Zero();
                if (background) {
                    behind = {background->at(x, y, 0), background->at(x, y, 1),
                              background->at(x, y, 2)};
                }
                for (auto it = contribs.rbegin(); it != contribs.rend(); ++it) {
                    const Splat& s = splats[it->splat];
                    SplatGrad& sg = grads[it->splat];
                    sg.color += g * (it->alpha * it->transmittance);
                    const double d_alpha = it->transmittance * g.dot(s.color - behind);
                    behind = it->alpha * s.color + (1.0 - it->alpha) * behind;
                    if (it->raw_alpha > kAlphaMax) continue;  // clipped: flat in opacity and kernel
                    sg.opacity += d_alpha * it->kernel;
                    const double d_power = d_alpha * s.opacity * it->kernel;
                    // power = -0.5 d^T A d, d = center - mean
                    sg.conic += (-0.5 * d_power) * (it->delta * it->delta.transpose());
                    sg.mean += 0.5 * d_power * (s.conic + s.conic.transpose()) * it->delta;
                }
            }
        }
    });

    std::vector<SplatGrad> out = std::move(partial[0]);
    for (int w = 1; w < workers; ++w) {
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i].mean += partial[w][i].mean;
            out[i].conic += partial[w][i].conic;
            out[i].opacity += partial[w][i].opacity;
            out[i].color += partial[w][i].color;
        }
    }
    return out;
}

}  // namespace hyrf
