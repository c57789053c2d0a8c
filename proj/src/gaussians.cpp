#include "hyrf/gaussians.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "hyrf/error.hpp"
#include "hyrf/precision.hpp"

namespace hyrf {

void ParamArray::resize(std::size_t n) {
    value.resize(n * width, 0.0);
    grad.resize(n * width, 0.0);
    moment1.resize(n * width, 0.0);
    moment2.resize(n * width, 0.0);
}

void ParamArray::append_copy(std::size_t i) {
    std::vector<double> copy(at(i), at(i) + width);
    append(copy);
}

void ParamArray::append(std::span<const double> v) {
    value.insert(value.end(), v.begin(), v.end());
    grad.insert(grad.end(), width, 0.0);
    moment1.insert(moment1.end(), width, 0.0);
    moment2.insert(moment2.end(), width, 0.0);
}

void ParamArray::keep(const std::vector<std::uint8_t>& mask) {
    auto compact = [&](std::vector<double>& a) {
        std::size_t dst = 0;
        for (std::size_t i = 0; i < mask.size(); ++i) {
            if (!mask[i]) continue;
            for (int k = 0; k < width; ++k) a[dst * width + k] = a[i * width + k];
            ++dst;
        }
        a.resize(dst * width);
    };
    compact(value);
    compact(grad);
    compact(moment1);
    compact(moment2);
}

void ParamArray::zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }

ExplicitRecord ExplicitGaussianSet::record(std::size_t i) const {
    ExplicitRecord r;
    r.position = Eigen::Map<const Eigen::Vector3d>(positions.at(i));
    r.color = Eigen::Map<const Eigen::Vector3d>(colors.at(i));
    r.scale = *scales.at(i);
    r.opacity = *opacities.at(i);
    return r;
}

void ExplicitGaussianSet::push_back(const ExplicitRecord& r) {
    positions.append(std::span<const double>(r.position.data(), 3));
    colors.append(std::span<const double>(r.color.data(), 3));
    scales.append(std::span<const double>(&r.scale, 1));
    opacities.append(std::span<const double>(&r.opacity, 1));
    grad_accum.push_back(0.0);
    grad_count.push_back(0);
}

void ExplicitGaussianSet::resize(std::size_t n) {
    for_each_array([n](ParamArray& a) { a.resize(n); });
    grad_accum.resize(n, 0.0);
    grad_count.resize(n, 0);
}

void ExplicitGaussianSet::zero_grad() {
    for_each_array([](ParamArray& a) { a.zero_grad(); });
}

void ExplicitGaussianSet::reset_stats() {
    std::fill(grad_accum.begin(), grad_accum.end(), 0.0);
    std::fill(grad_count.begin(), grad_count.end(), 0u);
}

void ExplicitGaussianSet::validate() const {
    const std::size_t n = size();
    auto check = [n](const ParamArray& a, const char* name) {
        if (a.value.size() != n * a.width || a.grad.size() != n * a.width ||
            a.moment1.size() != n * a.width || a.moment2.size() != n * a.width) {
            throw InvalidInput(std::string("gaussian array length mismatch: ") + name);
        }
        for (double v : a.value) {
            if (!std::isfinite(v)) throw InvalidInput(std::string("non-finite gaussian ") + name);
        }
    };
    check(positions, "positions");
    check(colors, "colors");
    check(scales, "scales");
    check(opacities, "opacities");
    if (grad_accum.size() != n || grad_count.size() != n) {
        throw InvalidInput("gaussian densification statistics length mismatch");
    }
}

double bounded_sigmoid(double x) { return sigmoid(std::clamp(x, -kLogitClamp, kLogitClamp)); }

namespace {

double bounded_sigmoid_grad(double x) {
    if (x <= -kLogitClamp || x >= kLogitClamp) return 0.0;
    const double s = sigmoid(x);
    return s * (1.0 - s);
}

constexpr double kMinRotationNorm = 1e-12;

}  // namespace

ActivatedGaussian aggregate(const RawGeometry& geo, const RawColor& color,
                            const ExplicitRecord& ex, double s_max) {
    ActivatedGaussian a;
    a.position = ex.position;
    a.opacity = bounded_sigmoid(geo.opacity + ex.opacity);
    for (int k = 0; k < 3; ++k) {
        a.color[k] = bounded_sigmoid(color.color[k] + ex.color[k]);
        a.scale[k] = bounded_sigmoid(geo.scale[k] + ex.scale) * s_max;
    }
    const Eigen::Vector4d r(geo.rotation[0], geo.rotation[1], geo.rotation[2], geo.rotation[3]);
    const double n = r.norm();
    if (n < kMinRotationNorm || !std::isfinite(n)) {
        a.rotation = Quaternion{};
        a.rotation_fallback = true;
    } else {
        a.rotation = Quaternion::from_vector(r / n);
    }
    return a;
}

AggregateGrad aggregate_backward(const RawGeometry& geo, const RawColor& color,
                                 const ExplicitRecord& ex, double s_max, const ActivatedGrad& grad) {
    AggregateGrad out;
    const double g_alpha = grad.opacity * bounded_sigmoid_grad(geo.opacity + ex.opacity);
    out.raw_geometry[0] = g_alpha;
    out.opacity = g_alpha;
    for (int k = 0; k < 3; ++k) {
        const double gc = grad.color[k] * bounded_sigmoid_grad(color.color[k] + ex.color[k]);
        out.raw_color[k] = gc;
        out.color[k] = gc;
        const double gs = grad.scale[k] * s_max * bounded_sigmoid_grad(geo.scale[k] + ex.scale);
        out.raw_geometry[1 + k] = gs;
        out.scale += gs;
    }
    const Eigen::Vector4d r(geo.rotation[0], geo.rotation[1], geo.rotation[2], geo.rotation[3]);
    const double n = r.norm();
    if (n >= kMinRotationNorm && std::isfinite(n)) {
        const Eigen::Vector4d u = r / n;
        const Eigen::Vector4d g = (grad.rotation - u * u.dot(grad.rotation)) / n;
        for (int k = 0; k < 4; ++k) out.raw_geometry[4 + k] = g[k];
    }
    return out;
}

DensifyResult densify(ExplicitGaussianSet& set, std::span<const ActivatedGaussian> activated,
                      double s_max, const DensifyOptions& opts, std::mt19937_64& rng) {
    const std::size_t n = set.size();
    if (activated.size() != n) throw InvalidInput("densify: activated geometry count mismatch");
    DensifyResult result;
    std::vector<std::size_t> to_clone, to_split;
    for (std::size_t i = 0; i < n; ++i) {
        if (set.grad_count[i] == 0) continue;
        const double mean_grad = set.grad_accum[i] / set.grad_count[i];
        if (!(mean_grad >= opts.grad_threshold)) continue;
        if (activated[i].scale.maxCoeff() <= opts.scale_split_threshold) {
            to_clone.push_back(i);
        } else {
            to_split.push_back(i);
        }
    }

    for (std::size_t i : to_clone) {
        set.for_each_array([i](ParamArray& a) { a.append_copy(i); });
        set.grad_accum.push_back(0.0);
        set.grad_count.push_back(0);
        ++result.cloned;
    }

    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<std::uint8_t> keep(set.size(), 1);
    for (std::size_t i : to_split) {
        const ActivatedGaussian& a = activated[i];
        const Eigen::Matrix3d rot = quat_to_rotation(a.rotation);
        // Shift the explicit scale so the largest activated axis shrinks by split_factor.
        const double s_big = std::clamp(a.scale.maxCoeff() / s_max, 1e-12, 1.0 - 1e-12);
        const double shift = logit(s_big / opts.split_factor) - logit(s_big);
        for (int child = 0; child < 2; ++child) {
            ExplicitRecord r = set.record(i);
            Eigen::Vector3d z;
            for (int k = 0; k < 3; ++k) z[k] = normal(rng);
            r.position += rot * a.scale.cwiseProduct(z);
            r.position = r.position.unaryExpr(&to_f32);
            r.scale = to_f32(r.scale + shift);
            set.push_back(r);
            keep.push_back(1);
        }
        keep[i] = 0;
        ++result.split;
    }
    if (!to_split.empty()) {
        set.for_each_array([&keep](ParamArray& a) { a.keep(keep); });
        std::size_t dst = 0;
        for (std::size_t i = 0; i < keep.size(); ++i) {
            if (keep[i]) ++dst;
        }
        set.grad_accum.resize(dst);
        set.grad_count.resize(dst);
    }
    set.reset_stats();
    return result;
}

std::size_t prune(ExplicitGaussianSet& set, std::span<const double> activated_opacity,
                  double min_opacity) {
    const std::size_t n = set.size();
    if (activated_opacity.size() != n) throw InvalidInput("prune: opacity count mismatch");
    std::vector<std::uint8_t> keep(n, 1);
    std::size_t removed = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (activated_opacity[i] < min_opacity) {
            keep[i] = 0;
            ++removed;
        }
    }
    if (removed == n) {
        std::ostringstream os;
        os << "pruning would remove all " << n << " gaussians (threshold " << min_opacity << ")";
        throw DivergenceError(os.str());
    }
    if (removed == 0) return 0;
    set.for_each_array([&keep](ParamArray& a) { a.keep(keep); });
    std::size_t dst = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!keep[i]) continue;
        set.grad_accum[dst] = set.grad_accum[i];
        set.grad_count[dst] = set.grad_count[i];
        ++dst;
    }
    set.grad_accum.resize(dst);
    set.grad_count.resize(dst);
    return removed;
}

void reset_opacity(ExplicitGaussianSet& set, double target) {
    if (!(target > 0.0 && target < 1.0)) {
        throw InvalidInput("reset_opacity: target must lie in (0, 1)");
    }
    const double cap = to_f32_down(logit(target));
    for (double& v : set.opacities.value) v = std::min(v, cap);
    std::fill(set.opacities.moment1.begin(), set.opacities.moment1.end(), 0.0);
    std::fill(set.opacities.moment2.begin(), set.opacities.moment2.end(), 0.0);
}

}  // namespace hyrf
