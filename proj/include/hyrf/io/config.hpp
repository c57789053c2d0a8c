#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "hyrf/dataset.hpp"
#include "hyrf/io/dataset_io.hpp"
#include "hyrf/model.hpp"
#include "hyrf/trainer.hpp"

namespace hyrf::io {

/// Flat key/value text with sections:
///
///     # comment
///     [train]
///     iterations = 2000
///
/// Keys are addressed as "section.key".
class ConfigFile {
public:
    static ConfigFile parse(const std::string& text, const std::string& origin = "<config>");
    static ConfigFile load(const std::string& path);

    /// Adds or replaces "section.key".
    void set(const std::string& key, const std::string& value);
    bool has(const std::string& key) const { return values_.count(key) != 0; }
    const std::map<std::string, std::string>& values() const { return values_; }
    /// "origin:line" of a key, or "command line" for overrides.
    std::string where(const std::string& key) const;

private:
    std::map<std::string, std::string> values_;
    std::map<std::string, std::string> where_;
};

/// Every tunable of a training run, defaulted to the reference settings.
struct RunSettings {
    TrainConfig train;

    SceneClass scene_class = SceneClass::Standard;
    AabbSource aabb_source = AabbSource::Cameras;
    double aabb_half = 1.3;
    double s_max_fraction = 0.01;
    double sphere_radius = 100.0;
    double tau_t = 0.2;
    int hash_levels = 16;
    int hash_features = 2;
    int hash_base_resolution = 16;
    int hash_finest_resolution = 2048;
    /// 0 picks the radiance table size from the scene class.
    int hash_log2_entries = 0;
    int hidden_width = 64;
    int hidden_layers = 2;
    int direction_frequencies = 4;
    double initial_opacity = 0.1;

    LoadOptions data;

    int log_interval = 10;
    int checkpoint_interval = 0;

    ModelConfig model_config(const Aabb& aabb) const;
};

/// Applies every key of `cfg` to `s`. Unknown keys and malformed values
/// raise ConfigError naming the key and its location.
void apply_config(const ConfigFile& cfg, RunSettings& s);

/// Model for `data` with fields/decoders from `seed` and one Gaussian per initial point.
HyrfModel build_model(const RunSettings& s, const Dataset& data);

}  // namespace hyrf::io
