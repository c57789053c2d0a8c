#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "hyrf/decoder.hpp"
#include "hyrf/geometry.hpp"

namespace hyrf {

/// One trainable per-Gaussian attribute: `width` scalars per Gaussian, plus
/// its gradient and first/second moment estimates. All four arrays move
/// together under densify and prune.
struct ParamArray {
    ParamArray() = default;
    explicit ParamArray(int w) : width(w) {}

    int width = 1;
    std::vector<double> value;
    std::vector<double> grad;
    std::vector<double> moment1;
    std::vector<double> moment2;

    std::size_t count() const { return width == 0 ? 0 : value.size() / width; }
    double* at(std::size_t i) { return value.data() + i * width; }
    const double* at(std::size_t i) const { return value.data() + i * width; }
    void resize(std::size_t n);
    void append_copy(std::size_t i);
    void append(std::span<const double> v);
    void keep(const std::vector<std::uint8_t>& mask);
    void zero_grad();
};

/// Explicit residual parameters of a single Gaussian (all raw, pre-activation).
struct ExplicitRecord {
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    Eigen::Vector3d color = Eigen::Vector3d::Zero();
    double scale = 0.0;
    double opacity = 0.0;
};

/// The compact explicit part of the scene: 8 scalars per Gaussian.
class ExplicitGaussianSet {
public:
    ParamArray positions{3};
    ParamArray colors{3};
    ParamArray scales{1};
    ParamArray opacities{1};

    /// Accumulated screen-space (NDC) position-gradient norms and visit counts.
    std::vector<double> grad_accum;
    std::vector<std::uint32_t> grad_count;

    std::size_t size() const { return positions.count(); }
    ExplicitRecord record(std::size_t i) const;
    void push_back(const ExplicitRecord& r);
    void resize(std::size_t n);
    void zero_grad();
    void reset_stats();
    /// Throws InvalidInput if the parallel arrays disagree in length or hold non-finite values.
    void validate() const;

    template <typename F>
    void for_each_array(F&& f) {
        f(positions);
        f(colors);
        f(scales);
        f(opacities);
    }
};

/// Render-ready properties after neural/explicit aggregation.
struct ActivatedGaussian {
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    double opacity = 0.5;
    Eigen::Vector3d color = Eigen::Vector3d::Constant(0.5);
    /// World units; each component in (0, s_max).
    Eigen::Vector3d scale = Eigen::Vector3d::Constant(0.01);
    Quaternion rotation;
    /// Set when the neural rotation was too small to normalize.
    bool rotation_fallback = false;
};

/// Logits are clamped to this magnitude before the sigmoid so activated
/// values stay strictly inside (0, 1).
inline constexpr double kLogitClamp = 30.0;
double bounded_sigmoid(double x);

ActivatedGaussian aggregate(const RawGeometry& geo, const RawColor& color,
                            const ExplicitRecord& ex, double s_max);

struct ActivatedGrad {
    double opacity = 0.0;
    Eigen::Vector3d color = Eigen::Vector3d::Zero();
    Eigen::Vector3d scale = Eigen::Vector3d::Zero();
    Eigen::Vector4d rotation = Eigen::Vector4d::Zero();
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
};

struct AggregateGrad {
    double raw_geometry[kGeometryOutputs] = {};
    double raw_color[kColorOutputs] = {};
    Eigen::Vector3d color = Eigen::Vector3d::Zero();
    double scale = 0.0;
    double opacity = 0.0;
};

AggregateGrad aggregate_backward(const RawGeometry& geo, const RawColor& color,
                                 const ExplicitRecord& ex, double s_max, const ActivatedGrad& grad);

struct DensifyOptions {
    /// Mean accumulated NDC gradient norm above which a Gaussian is densified.
    double grad_threshold = 2e-4;
    /// Largest activated scale (world units) that still clones instead of splitting.
    double scale_split_threshold = 0.01;
    double split_factor = 1.6;
};

struct DensifyResult {
    std::size_t cloned = 0;
    std::size_t split = 0;
};

/// Clones small and splits large Gaussians whose mean gradient exceeds the
/// threshold; `activated` holds the current geometry of every Gaussian.
/// Statistics are reset afterwards.
DensifyResult densify(ExplicitGaussianSet& set, std::span<const ActivatedGaussian> activated,
                      double s_max, const DensifyOptions& opts, std::mt19937_64& rng);

/// Removes Gaussians whose activated opacity is below the threshold. Returns
/// the number removed. Throws DivergenceError if nothing would remain.
std::size_t prune(ExplicitGaussianSet& set, std::span<const double> activated_opacity,
                  double min_opacity);

/// alpha_e := min(alpha_e, logit(target)). Throws InvalidInput unless target is in (0, 1).
void reset_opacity(ExplicitGaussianSet& set, double target);

}  // namespace hyrf
