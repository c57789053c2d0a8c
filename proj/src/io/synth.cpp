#include "hyrf/io/synth.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>

#include <json.hpp>

#include "hyrf/error.hpp"
#include "hyrf/io/checkpoint.hpp"
#include "hyrf/io/dataset_io.hpp"
#include "hyrf/io/image_io.hpp"
#include "hyrf/io/ply.hpp"
#include "hyrf/pipeline.hpp"
#include "hyrf/precision.hpp"

namespace hyrf::io {

namespace {

const std::vector<Eigen::Vector3d>& default_palette() {
    static const std::vector<Eigen::Vector3d> p = {
        {0.90, 0.25, 0.20}, {0.20, 0.70, 0.30}, {0.25, 0.40, 0.90},
        {0.95, 0.80, 0.20}, {0.80, 0.30, 0.80}, {0.90, 0.90, 0.90},
    };
    return p;
}

}  // namespace

SynthScene synth_scene(const SynthSpec& spec) {
    if (spec.n_gaussians < 1) throw InvalidInput("synth: need at least one gaussian");
    if (spec.n_cameras < 1) throw InvalidInput("synth: need at least one camera");
    if (spec.width < 1 || spec.height < 1) throw InvalidInput("synth: bad resolution");
    const auto& palette = spec.palette.empty() ? default_palette() : spec.palette;
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    SynthScene out;
    const double fx = focal_from_fov(spec.fov_x, spec.width);
    for (int c = 0; c < spec.n_cameras; ++c) {
        // Fan out from view 0: 0, -1, +1, -2, +2, ... steps; odd views sit low, even views high.
        const int j = c % 2 == 1 ? -(c + 1) / 2 : c / 2;
        const double deg = std::numbers::pi / 180.0;
        const double az = j * spec.azimuth_step_deg * deg;
        const double tilt = c == 0 ? 0.0 : (c % 2 == 1 ? -1.0 : 1.0) * spec.elevation_spread_deg;
        const double el = (spec.elevation_deg + tilt) * deg;
        const Eigen::Vector3d eye = spec.orbit_radius * Eigen::Vector3d(std::cos(el) * std::cos(az),
                                                                        std::cos(el) * std::sin(az),
                                                                        std::sin(el));
        const Camera raw = Camera::look_at(eye, Eigen::Vector3d::Zero(), Eigen::Vector3d::UnitZ(),
                                           spec.fov_x, spec.width, spec.height);
        View v;
        std::ostringstream name;
        name << "r_" << std::setw(3) << std::setfill('0') << c;
        v.name = name.str();
        out.c2w.push_back(opengl_c2w(raw));
        v.camera = camera_from_opengl_c2w(out.c2w.back(), fx, fx, spec.width, spec.height, raw.near);
        out.data.views.push_back(std::move(v));
    }
    assign_split(out.data, spec.test_every);

    const Aabb box = scene_aabb(out.data, AabbSource::Fixed);
    ModelConfig cfg = ModelConfig::for_scene(spec.scene_class, box);
    out.model = HyrfModel::create(cfg, spec.seed);
    HyrfModel& m = out.model;

    // Constant decoders: zero weights, biases carry the shared terms.
    for (DecoderNet* net : {&m.geometry_decoder, &m.color_decoder}) {
        for (double& p : net->params()) p = 0.0;
    }
    const int last = m.geometry_decoder.n_layers() - 1;
    m.geometry_decoder.params()[m.geometry_decoder.bias_offset(last) + 4] = 1.0;
    Eigen::Vector3d bg_logit;
    for (int k = 0; k < 3; ++k) bg_logit[k] = to_f32(logit(spec.background[k]));
    const int clast = m.color_decoder.n_layers() - 1;
    for (int k = 0; k < 3; ++k) m.color_decoder.params()[m.color_decoder.bias_offset(clast) + k] = bg_logit[k];

    PointCloud init;
    for (int i = 0; i < spec.n_gaussians; ++i) {
        Eigen::Vector3d p;
        do {
            for (int k = 0; k < 3; ++k) p[k] = 2.0 * u(rng) - 1.0;
        } while (p.squaredNorm() > 1.0);
        p *= spec.scene_radius;
        const Eigen::Vector3d base = palette[std::size_t(u(rng) * palette.size()) % palette.size()];
        Eigen::Vector3d color;
        for (int k = 0; k < 3; ++k) color[k] = std::clamp(base[k] + 0.05 * (u(rng) - 0.5), 0.02, 0.98);

        ExplicitRecord r;
        r.position = p.unaryExpr(&to_f32);
        for (int k = 0; k < 3; ++k) r.color[k] = to_f32(logit(color[k]) - bg_logit[k]);
        r.opacity = to_f32(logit(0.6 + 0.35 * u(rng)));
        r.scale = to_f32(logit(0.4 + 0.5 * u(rng)));
        m.gaussians.push_back(r);

        Eigen::Vector3d jitter;
        for (int k = 0; k < 3; ++k) jitter[k] = spec.point_jitter * normal(rng);
        init.positions.push_back(r.position + jitter);
        init.colors.push_back(color);
    }
    // Points pass through the PLY's float32 storage so loaded data matches.
    for (auto& p : init.positions) p = p.unaryExpr(&to_f32);
    for (auto& c : init.colors) c = (c * 255.0).array().round() / 255.0;
    out.data.points = init.positions;
    out.data.colors = init.colors;

    for (auto& v : out.data.views) v.image = render_frame(m, v.camera).image;
    return out;
}

void write_synth(const SynthScene& scene, const SynthSpec& spec, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(dir) / "images");
    nlohmann::json j;
    j["camera_angle_x"] = spec.fov_x;
    j["w"] = spec.width;
    j["h"] = spec.height;
    j["frames"] = nlohmann::json::array();
    for (std::size_t i = 0; i < scene.data.views.size(); ++i) {
        const View& v = scene.data.views[i];
        const Eigen::Matrix4d& c2w = scene.c2w[i];
        nlohmann::json m = nlohmann::json::array();
        for (int r = 0; r < 4; ++r) {
            m.push_back({c2w(r, 0), c2w(r, 1), c2w(r, 2), c2w(r, 3)});
        }
        const std::string rel = "images/" + v.name + ".npy";
        j["frames"].push_back({{"file_path", rel}, {"transform_matrix", m}});
        write_npy((fs::path(dir) / rel).string(), v.image, true);
    }
    std::ofstream out(fs::path(dir) / "transforms.json");
    if (!out) throw DataError("cannot write transforms.json into '" + dir + "'");
    out << std::setw(2) << j << "\n";

    PointCloud pc{scene.data.points, scene.data.colors};
    write_ply((fs::path(dir) / "points3d.ply").string(), pc);

    Checkpoint ck;
    ck.model = scene.model;
    ck.cameras = camera_records(scene.data);
    save_checkpoint((fs::path(dir) / "gt.ckpt").string(), ck);

    // Matching training settings, for `train --config`.
    std::ofstream cfg(fs::path(dir) / "synth.cfg");
    if (!cfg) throw DataError("cannot write synth.cfg into '" + dir + "'");
    cfg << "[model]\nscene_class = " << to_string(spec.scene_class) << "\naabb = fixed\n";
}

}  // namespace hyrf::io
