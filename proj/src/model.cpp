#include "hyrf/model.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "hyrf/error.hpp"
#include "hyrf/precision.hpp"

namespace hyrf {

int radiance_log2_entries(SceneClass c) {
    switch (c) {
        case SceneClass::Synthetic: return 17;
        case SceneClass::Standard: return 18;
        case SceneClass::Large: return 21;
    }
    throw InvalidInput("unknown scene class");
}

std::string to_string(SceneClass c) {
    switch (c) {
        case SceneClass::Synthetic: return "synthetic";
        case SceneClass::Standard: return "standard";
        case SceneClass::Large: return "large";
    }
    return "unknown";
}

SceneClass scene_class_from_string(const std::string& s) {
    if (s == "synthetic") return SceneClass::Synthetic;
    if (s == "standard") return SceneClass::Standard;
    if (s == "large") return SceneClass::Large;
    throw InvalidInput("unknown scene class '" + s + "' (expected synthetic|standard|large)");
}

ModelConfig ModelConfig::for_scene(SceneClass c, const Aabb& aabb) {
    ModelConfig cfg;
    cfg.scene_class = c;
    cfg.radiance_field.log2_max_entries = radiance_log2_entries(c);
    cfg.geometry_field.log2_max_entries = radiance_log2_entries(c) - 1;
    cfg.aabb = aabb;
    cfg.s_max = 0.01 * aabb.diagonal();
    return cfg;
}

void ModelConfig::validate() const {
    aabb.validate();
    radiance_field.validate();
    geometry_field.validate();
    if (hidden_width < 1 || hidden_layers < 0) throw InvalidInput("invalid decoder shape");
    if (direction_frequencies < 0) throw InvalidInput("direction_frequencies must be >= 0");
    if (!(s_max > 0.0)) throw InvalidInput("s_max must be positive");
    if (!(sphere_radius > 0.0)) throw InvalidInput("sphere_radius must be positive");
    if (!(tau_t >= 0.0 && tau_t <= 1.0)) throw InvalidInput("tau_t must lie in [0, 1]");
    // Every AABB-normalized point of the box sits within sqrt(3) of the origin.
    if (!(sphere_radius > std::sqrt(3.0))) {
        throw ConfigError("background sphere radius must enclose the normalized scene box");
    }
}

HyrfModel HyrfModel::create(const ModelConfig& config, std::uint64_t seed) {
    config.validate();
    HyrfModel m;
    m.config = config;
    m.radiance = HashField(config.radiance_field, seed * 4 + 1);
    m.geometry = HashField(config.geometry_field, seed * 4 + 2);
    std::vector<int> geo_dims{config.geometry_field.output_dim()};
    std::vector<int> col_dims{config.radiance_field.output_dim() +
                              direction_encoding_dim(config.direction_frequencies)};
    for (int l = 0; l < config.hidden_layers; ++l) {
        geo_dims.push_back(config.hidden_width);
        col_dims.push_back(config.hidden_width);
    }
    geo_dims.push_back(kGeometryOutputs);
    col_dims.push_back(kColorOutputs);
    m.geometry_decoder = DecoderNet(geo_dims, seed * 4 + 3);
    m.color_decoder = DecoderNet(col_dims, seed * 4 + 4);
    return m;
}

int HyrfModel::color_decoder_inputs() const { return color_decoder.input_dim(); }

void HyrfModel::zero_grad() {
    gaussians.zero_grad();
    radiance.zero_grad();
    geometry.zero_grad();
    geometry_decoder.zero_grad();
    color_decoder.zero_grad();
}

namespace {

// Mean distance to the k nearest neighbours using a uniform grid.
std::vector<double> knn_mean_distance(std::span<const Eigen::Vector3d> pts, int k) {
    const std::size_t n = pts.size();
    std::vector<double> out(n, 0.0);
    if (n < 2) {
        std::fill(out.begin(), out.end(), 1.0);
        return out;
    }
    Eigen::Vector3d lo = pts[0], hi = pts[0];
    for (const auto& p : pts) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    const Eigen::Vector3d ext = (hi - lo).cwiseMax(1e-9);
    const double cell = std::max(1e-9, std::cbrt(ext.prod() / double(n)) * 1.5);
    auto key = [&](const Eigen::Vector3d& p, int dx, int dy, int dz) {
        const auto ix = static_cast<std::int64_t>(std::floor((p.x() - lo.x()) / cell)) + dx;
        const auto iy = static_cast<std::int64_t>(std::floor((p.y() - lo.y()) / cell)) + dy;
        const auto iz = static_cast<std::int64_t>(std::floor((p.z() - lo.z()) / cell)) + dz;
        return (ix * 73856093) ^ (iy * 19349663) ^ (iz * 83492791);
    };
    std::unordered_map<std::int64_t, std::vector<std::uint32_t>> grid;
    for (std::size_t i = 0; i < n; ++i) grid[key(pts[i], 0, 0, 0)].push_back(std::uint32_t(i));

    const int want = std::min<int>(k, static_cast<int>(n) - 1);
    std::vector<double> best;
    for (std::size_t i = 0; i < n; ++i) {
        for (int ring = 1;; ++ring) {
            best.clear();
            for (int dz = -ring; dz <= ring; ++dz)
                for (int dy = -ring; dy <= ring; ++dy)
                    for (int dx = -ring; dx <= ring; ++dx) {
                        auto it = grid.find(key(pts[i], dx, dy, dz));
                        if (it == grid.end()) continue;
                        for (std::uint32_t j : it->second) {
                            if (j != i) best.push_back((pts[j] - pts[i]).squaredNorm());
                        }
                    }
            // Neighbours within `ring` cells are exact only up to distance ring * cell.
            std::sort(best.begin(), best.end());
            const double safe = ring * cell;
            if (static_cast<int>(best.size()) >= want && best[want - 1] <= safe * safe) break;
            if (ring * cell > ext.maxCoeff() * 2 + cell) break;
        }
        const int m = std::min<int>(want, static_cast<int>(best.size()));
        double acc = 0.0;
        for (int j = 0; j < m; ++j) acc += best[j];
        out[i] = m > 0 ? std::sqrt(acc / m) : cell;
    }
    return out;
}

}  // namespace

void initialize_gaussians(HyrfModel& model, std::span<const Eigen::Vector3d> points,
                          std::span<const Eigen::Vector3d> colors, double initial_opacity) {
    if (points.empty()) throw InvalidInput("initialize_gaussians: no points");
    if (colors.size() != points.size()) {
        throw InvalidInput("initialize_gaussians: points and colors differ in length");
    }
    const std::vector<double> dist = knn_mean_distance(points, 3);
    const double s_max = model.config.s_max;
    const double opacity_logit = to_f32(logit(initial_opacity));
    for (std::size_t i = 0; i < points.size(); ++i) {
        ExplicitRecord r;
        r.position = points[i].unaryExpr(&to_f32);
        for (int k = 0; k < 3; ++k) r.color[k] = to_f32(logit(std::clamp(colors[i][k], 0.01, 0.99)));
        r.scale = to_f32(logit(std::clamp(dist[i] / s_max, 1e-4, 0.99)));
        r.opacity = opacity_logit;
        model.gaussians.push_back(r);
    }
}

}  // namespace hyrf
