#include "hyrf/io/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "hyrf/error.hpp"

namespace hyrf::io {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

ConfigFile ConfigFile::parse(const std::string& text, const std::string& origin) {
    ConfigFile cfg;
    std::istringstream in(text);
    std::string line, section;
    int no = 0;
    while (std::getline(in, line)) {
        ++no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::string at = origin + ":" + std::to_string(no);
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(at + ": unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) throw ConfigError(at + ": empty section name");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(at + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
            value = value.substr(1, value.size() - 2);
        }
        if (key.empty()) throw ConfigError(at + ": empty key");
        if (section.empty()) throw ConfigError(at + ": key '" + key + "' outside any section");
        const std::string full = section + "." + key;
        if (cfg.values_.count(full)) throw ConfigError(at + ": duplicate key '" + full + "'");
        cfg.values_[full] = value;
        cfg.where_[full] = at;
    }
    return cfg;
}

ConfigFile ConfigFile::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path);
}

void ConfigFile::set(const std::string& key, const std::string& value) {
    if (key.find('.') == std::string::npos) {
        throw ConfigError("override '" + key + "' must be written as section.key");
    }
    values_[key] = value;
    where_[key] = "command line";
}

std::string ConfigFile::where(const std::string& key) const {
    auto it = where_.find(key);
    return it == where_.end() ? "<unknown>" : it->second;
}

namespace {

template <typename T>
T parse_number(const std::string& key, const std::string& v, const std::string& where) {
    T out{};
    const char* b = v.data();
    const char* e = v.data() + v.size();
    auto [p, ec] = std::from_chars(b, e, out);
    if (ec != std::errc() || p != e) {
        throw ConfigError(where + ": '" + key + "' expects a number, got '" + v + "'");
    }
    return out;
}

bool parse_bool(const std::string& key, const std::string& v, const std::string& where) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError(where + ": '" + key + "' expects true/false, got '" + v + "'");
}

}  // namespace

void apply_config(const ConfigFile& cfg, RunSettings& s) {
    using Setter = std::function<void(const std::string&, const std::string&, const std::string&)>;
    auto d = [](double& t) -> Setter {
        return [&t](const std::string& k, const std::string& v, const std::string& w) {
            t = parse_number<double>(k, v, w);
        };
    };
    auto i = [](int& t) -> Setter {
        return [&t](const std::string& k, const std::string& v, const std::string& w) {
            t = parse_number<int>(k, v, w);
        };
    };
    auto b = [](bool& t) -> Setter {
        return [&t](const std::string& k, const std::string& v, const std::string& w) {
            t = parse_bool(k, v, w);
        };
    };
    auto& tr = s.train;
    const std::map<std::string, Setter> table = {
        {"model.scene_class",
         [&](const std::string&, const std::string& v, const std::string&) {
             s.scene_class = scene_class_from_string(v);
         }},
        {"model.aabb",
         [&](const std::string&, const std::string& v, const std::string&) {
             s.aabb_source = aabb_source_from_string(v);
         }},
        {"model.aabb_half", d(s.aabb_half)},
        {"model.s_max_fraction", d(s.s_max_fraction)},
        {"model.sphere_radius", d(s.sphere_radius)},
        {"model.tau_t", d(s.tau_t)},
        {"model.hash_levels", i(s.hash_levels)},
        {"model.hash_features", i(s.hash_features)},
        {"model.hash_base_resolution", i(s.hash_base_resolution)},
        {"model.hash_finest_resolution", i(s.hash_finest_resolution)},
        {"model.hash_log2_entries", i(s.hash_log2_entries)},
        {"model.hidden_width", i(s.hidden_width)},
        {"model.hidden_layers", i(s.hidden_layers)},
        {"model.direction_frequencies", i(s.direction_frequencies)},
        {"model.initial_opacity", d(s.initial_opacity)},
        {"train.iterations", i(tr.iterations)},
        {"train.lambda_ssim", d(tr.lambda_ssim)},
        {"train.ssim_window", i(tr.ssim.window)},
        {"train.lr_position", d(tr.lr.position)},
        {"train.lr_position_final", d(tr.lr.position_final)},
        {"train.lr_position_steps", i(tr.lr.position_decay_steps)},
        {"train.lr_explicit", d(tr.lr.explicit_attributes)},
        {"train.lr_hash", d(tr.lr.hash_tables)},
        {"train.lr_decoder", d(tr.lr.decoders)},
        {"train.densify_from", i(tr.densify_from)},
        {"train.densify_until", i(tr.densify_until)},
        {"train.densify_interval", i(tr.densify_interval)},
        {"train.densify_grad_threshold", d(tr.densify_grad_threshold)},
        {"train.percent_dense", d(tr.percent_dense)},
        {"train.split_factor", d(tr.split_factor)},
        {"train.opacity_reset_interval", i(tr.opacity_reset_interval)},
        {"train.opacity_reset_value", d(tr.opacity_reset_value)},
        {"train.prune_opacity", d(tr.prune_opacity)},
        {"train.seed",
         [&](const std::string& k, const std::string& v, const std::string& w) {
             tr.seed = parse_number<std::uint64_t>(k, v, w);
         }},
        {"render.threads", i(tr.render.threads)},
        {"render.cull", b(tr.render.cull)},
        {"render.cull_tolerance", d(tr.render.cull_tolerance)},
        {"render.background", b(tr.render.background)},
        {"data.format",
         [&](const std::string&, const std::string& v, const std::string&) {
             s.data.format = dataset_format_from_string(v);
         }},
        {"data.test_every", i(s.data.test_every)},
        {"data.near", d(s.data.near)},
        {"data.random_points",
         [&](const std::string& k, const std::string& v, const std::string& w) {
             s.data.random_points = parse_number<std::size_t>(k, v, w);
         }},
        {"output.log_interval", i(s.log_interval)},
        {"output.checkpoint_interval", i(s.checkpoint_interval)},
    };
    for (const auto& [key, value] : cfg.values()) {
        auto it = table.find(key);
        if (it == table.end()) throw ConfigError(cfg.where(key) + ": unknown key '" + key + "'");
        try {
            it->second(key, value, cfg.where(key));
        } catch (const InvalidInput& e) {
            throw ConfigError(cfg.where(key) + ": " + e.what());
        }
    }
    try {
        s.train.validate();
    } catch (const InvalidInput& e) {
        throw ConfigError(e.what());
    }
}

ModelConfig RunSettings::model_config(const Aabb& aabb) const {
    ModelConfig c = ModelConfig::for_scene(scene_class, aabb);
    const double growth = HashFieldConfig::growth_for(hash_base_resolution, hash_finest_resolution,
                                                      hash_levels);
    for (HashFieldConfig* f : {&c.radiance_field, &c.geometry_field}) {
        f->n_levels = hash_levels;
        f->features_per_entry = hash_features;
        f->base_resolution = hash_base_resolution;
        f->growth_factor = growth;
    }
    if (hash_log2_entries > 0) {
        c.radiance_field.log2_max_entries = hash_log2_entries;
        c.geometry_field.log2_max_entries = std::max(1, hash_log2_entries - 1);
    }
    c.hidden_width = hidden_width;
    c.hidden_layers = hidden_layers;
    c.direction_frequencies = direction_frequencies;
    c.s_max = s_max_fraction * aabb.diagonal();
    c.sphere_radius = sphere_radius;
    c.tau_t = tau_t;
    try {
        c.validate();
    } catch (const InvalidInput& e) {
        throw ConfigError(e.what());
    }
    return c;
}

HyrfModel build_model(const RunSettings& s, const Dataset& data) {
    if (data.points.empty()) throw DataError("dataset has no initial points");
    const Aabb box = scene_aabb(data, s.aabb_source, s.aabb_half);
    HyrfModel m = HyrfModel::create(s.model_config(box), s.train.seed);
    initialize_gaussians(m, data.points, data.colors, s.initial_opacity);
    return m;
}

}  // namespace hyrf::io
