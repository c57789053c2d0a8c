#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hyrf/decoder.hpp"
#include "hyrf/gaussians.hpp"
#include "hyrf/geometry.hpp"
#include "hyrf/hash_field.hpp"

namespace hyrf {

/// Hash-table capacity class; the radiance field gets 2^17 / 2^18 / 2^21
/// entries per level and the geometry field half of that.
enum class SceneClass : std::uint8_t { Synthetic = 0, Standard = 1, Large = 2 };

int radiance_log2_entries(SceneClass c);
std::string to_string(SceneClass c);
SceneClass scene_class_from_string(const std::string& s);

struct ModelConfig {
    SceneClass scene_class = SceneClass::Standard;
    HashFieldConfig radiance_field;
    HashFieldConfig geometry_field;
    int hidden_width = 64;
    int hidden_layers = 2;
    int direction_frequencies = 4;
    Aabb aabb;
    /// Activated scales are sigmoid outputs times this (world units).
    double s_max = 0.01;
    double sphere_radius = 100.0;
    double tau_t = 0.2;

    /// Config for a scene class with the default level layout and an
    /// s_max of 1% of the AABB diagonal.
    static ModelConfig for_scene(SceneClass c, const Aabb& aabb);
    void validate() const;
};

/// Explicit Gaussians plus the decoupled neural fields and their decoders.
struct HyrfModel {
    ModelConfig config;
    ExplicitGaussianSet gaussians;
    HashField radiance;
    HashField geometry;
    DecoderNet geometry_decoder;
    DecoderNet color_decoder;

    /// Fields and decoders freshly initialized from `seed`; no Gaussians.
    static HyrfModel create(const ModelConfig& config, std::uint64_t seed);

    int color_decoder_inputs() const;
    void zero_grad();
};

/// Adds one Gaussian per point. Colors in [0,1] become explicit color logits,
/// explicit scales start from the mean distance to the 3 nearest neighbours
/// and explicit opacities at logit(initial_opacity).
void initialize_gaussians(HyrfModel& model, std::span<const Eigen::Vector3d> points,
                          std::span<const Eigen::Vector3d> colors, double initial_opacity = 0.1);

/// Hash-field input for a world-space point.
inline Eigen::Vector3d field_coordinates(const Eigen::Vector3d& p, const Aabb& aabb) {
    return contract(normalize_to_aabb(p, aabb));
}

}  // namespace hyrf
