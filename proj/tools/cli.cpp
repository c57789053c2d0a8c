#include "cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "hyrf/codec/bundle.hpp"
#include "hyrf/error.hpp"
#include "hyrf/io/checkpoint.hpp"
#include "hyrf/io/config.hpp"
#include "hyrf/io/dataset_io.hpp"
#include "hyrf/io/image_io.hpp"
#include "hyrf/io/synth.hpp"
#include "hyrf/pipeline.hpp"
#include "hyrf/trainer.hpp"

namespace hyrf::cli {

namespace {

namespace fs = std::filesystem;

struct Common {
    std::string config_path;
    std::vector<std::string> overrides;
    int threads = 0;
};

io::ConfigFile load_config(const Common& c) {
    io::ConfigFile cfg = c.config_path.empty() ? io::ConfigFile{} : io::ConfigFile::load(c.config_path);
    for (const auto& kv : c.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw ConfigError("override '" + kv + "' is not of the form section.key=value");
        }
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (c.threads > 0) cfg.set("render.threads", std::to_string(c.threads));
    return cfg;
}

io::RunSettings settings(const Common& c) {
    io::RunSettings s;
    io::apply_config(load_config(c), s);
    return s;
}

void add_common(CLI::App* app, Common& c) {
    app->add_option("--config", c.config_path, "Config file ([section] key = value)")
        ->check(CLI::ExistingFile);
    app->add_option("--set", c.overrides, "Override a config key, e.g. --set train.iterations=500");
    app->add_option("--threads", c.threads, "Worker threads (1 = reproducible single-thread mode)")
        ->check(CLI::PositiveNumber);
}

std::string fmt_db(double v) {
    if (std::isinf(v)) return "inf";
    std::ostringstream s;
    s << std::fixed << std::setprecision(2) << v;
    return s.str();
}

// A camera from a JSON file: transforms-style intrinsics plus one
// transform_matrix, either top level or in frames[0].
Camera camera_from_file(const std::string& path, double near) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open camera file '" + path + "'");
    nlohmann::json j;
    try {
        f >> j;
        const auto& fr = j.contains("frames") ? j.at("frames").at(0) : j;
        const int w = j.at("w").get<int>(), h = j.at("h").get<int>();
        double fx, fy;
        if (j.contains("fl_x")) {
            fx = j["fl_x"].get<double>();
            fy = j.contains("fl_y") ? j["fl_y"].get<double>() : fx;
        } else {
            fx = io::focal_from_fov(j.at("camera_angle_x").get<double>(), w);
            fy = fx;
        }
        Eigen::Matrix4d c2w = Eigen::Matrix4d::Identity();
        const auto& m = fr.at("transform_matrix");
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 4; ++c) c2w(r, c) = m.at(r).at(c).get<double>();
        Camera cam = io::camera_from_opengl_c2w(c2w, fx, fy, w, h, near);
        cam.validate();
        return cam;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path + ": " + e.what());
    } catch (const InvalidInput& e) {
        throw DataError(path + ": " + e.what());
    }
}

io::Checkpoint load_any(const std::string& path) {
    const auto bytes = io::read_file(path);
    if (bytes.size() >= 8 && std::string(bytes.begin(), bytes.begin() + 8) == "HYRFCKPT") {
        return io::decode_checkpoint(bytes);
    }
    return codec::decompress_model(bytes);
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err,
        const std::atomic<bool>* stop) {
    auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
    auto log = std::make_shared<spdlog::logger>("hyrf", sink);
    log->set_pattern("[%H:%M:%S] %v");

    CLI::App app{"Hybrid radiance field trainer, renderer and codec", "hyrf"};
    app.require_subcommand(1);

    Common train_c;
    std::string train_data, train_out;
    int train_iters = 0;
    auto* train = app.add_subcommand("train", "Fit a model to a dataset");
    train->add_option("--data", train_data, "Dataset directory")->required();
    train->add_option("--out", train_out, "Output directory")->required();
    train->add_option("--iterations", train_iters, "Shorthand for --set train.iterations=N")
        ->check(CLI::PositiveNumber);
    add_common(train, train_c);

    Common render_c;
    std::string render_ckpt, render_camera, render_out;
    auto* render = app.add_subcommand("render", "Render one view of a checkpoint to PNG");
    render->add_option("--checkpoint", render_ckpt, "Checkpoint or compressed bundle")->required();
    render->add_option("--camera", render_camera, "Camera index in the checkpoint, or a JSON camera file")
        ->required();
    render->add_option("--out", render_out, "Output PNG")->required();
    add_common(render, render_c);

    Common eval_c;
    std::string eval_ckpt, eval_data, eval_csv;
    bool eval_all = false;
    auto* eval = app.add_subcommand("eval", "PSNR/SSIM of a checkpoint on a dataset's test views");
    eval->add_option("--checkpoint", eval_ckpt, "Checkpoint or compressed bundle")->required();
    eval->add_option("--data", eval_data, "Dataset directory")->required();
    eval->add_option("--csv", eval_csv, "Also write the table as CSV");
    eval->add_flag("--all", eval_all, "Evaluate every view, not just the test split");
    add_common(eval, eval_c);

    std::string comp_in, comp_out;
    int comp_threads = 1;
    codec::RvqConfig rvq;
    auto* compress = app.add_subcommand("compress", "Compress a checkpoint into a bundle");
    compress->add_option("--checkpoint", comp_in, "Input checkpoint")->required();
    compress->add_option("--out", comp_out, "Output bundle")->required();
    compress->add_option("--stages", rvq.stages, "R-VQ stages")->check(CLI::Range(1, 255));
    compress->add_option("--codebook", rvq.codebook_size, "R-VQ codewords per stage")
        ->check(CLI::Range(1, 65535));
    compress->add_option("--kmeans-iters", rvq.iterations, "Lloyd iterations per stage")
        ->check(CLI::PositiveNumber);
    compress->add_option("--seed", rvq.seed, "Codebook seeding");
    compress->add_option("--threads", comp_threads, "Worker threads")->check(CLI::PositiveNumber);

    std::string dec_in, dec_out;
    auto* decompress = app.add_subcommand("decompress", "Expand a bundle back into a checkpoint");
    decompress->add_option("--bundle", dec_in, "Input bundle")->required();
    decompress->add_option("--out", dec_out, "Output checkpoint")->required();

    io::SynthSpec synth_spec;
    std::string synth_out;
    auto* synth = app.add_subcommand("synth", "Write the synthetic Gaussian scene as a dataset");
    synth->add_option("--seed", synth_spec.seed, "Scene seed");
    synth->add_option("--n", synth_spec.n_gaussians, "Ground-truth Gaussians")->check(CLI::PositiveNumber);
    synth->add_option("--cameras", synth_spec.n_cameras, "Views")->check(CLI::PositiveNumber);
    synth->add_option("--size", synth_spec.width, "Image width and height")->check(CLI::PositiveNumber);
    synth->add_option("--out", synth_out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kUsage;
    }

    try {
        if (*train) {
            if (train_iters > 0) train_c.overrides.push_back("train.iterations=" + std::to_string(train_iters));
            const io::RunSettings s = settings(train_c);
            const Dataset data = io::load_dataset(train_data, s.data);
            log->info("loaded {} views ({} train, {} test), {} initial points", data.views.size(),
                      data.train_views().size(), data.test_views().size(), data.points.size());
            HyrfModel model = io::build_model(s, data);
            FitOptions fo;
            fo.out_dir = train_out;
            fo.log_interval = s.log_interval;
            fo.checkpoint_interval = s.checkpoint_interval;
            fo.stop = stop;
            fo.on_log = [&](const StepMetrics& m, double wall) {
                log->info("it {:>6}  loss {:.5f}  psnr {:>6}  gaussians {}  {:.1f}s", m.iteration,
                          m.loss, fmt_db(m.psnr), m.n_gaussians, wall);
            };
            const FitResult r = fit(model, data, s.train, fo);
            if (r.interrupted) log->warn("interrupted after {} iterations", r.iterations);
            log->info("checkpoint: {}", r.checkpoint_path);
            const auto tests = data.test_views();
            if (!tests.empty()) {
                double sum = 0.0;
                for (const auto& row : evaluate(model, tests, s.train.render)) sum += row.psnr;
                out << "test psnr " << fmt_db(sum / tests.size()) << "\n";
            }
            return kOk;
        }

        if (*render) {
            const io::RunSettings s = settings(render_c);
            const io::Checkpoint ck = load_any(render_ckpt);
            Camera cam;
            if (!render_camera.empty() &&
                render_camera.find_first_not_of("0123456789") == std::string::npos) {
                const std::size_t idx = std::stoul(render_camera);
                if (idx >= ck.cameras.size()) {
                    throw InvalidInput("camera index " + render_camera + " out of range (checkpoint has " +
                                       std::to_string(ck.cameras.size()) + ")");
                }
                cam = ck.cameras[idx].camera;
            } else {
                cam = camera_from_file(render_camera, s.data.near);
            }
            const FrameResult fr = render_frame(ck.model, cam, s.train.render);
            io::write_png(render_out, fr.image);
            log->info("rendered {} of {} Gaussians to {}", fr.stats.rendered, ck.model.gaussians.size(),
                      render_out);
            return kOk;
        }

        if (*eval) {
            const io::RunSettings s = settings(eval_c);
            const io::Checkpoint ck = load_any(eval_ckpt);
            const Dataset data = io::load_dataset(eval_data, s.data);
            std::vector<const View*> views;
            for (const auto& v : data.views) {
                if (eval_all || v.test) views.push_back(&v);
            }
            if (views.empty()) throw DataError(eval_data + ": no views to evaluate");
            const auto rows = evaluate(ck.model, views, s.train.render);
            double psum = 0.0, ssum = 0.0;
            out << std::left << std::setw(20) << "view" << std::right << std::setw(10) << "psnr"
                << std::setw(10) << "ssim" << "\n";
            for (const auto& r : rows) {
                out << std::left << std::setw(20) << r.name << std::right << std::setw(10) << fmt_db(r.psnr)
                    << std::setw(10) << std::fixed << std::setprecision(4) << r.ssim << "\n";
                psum += r.psnr;
                ssum += r.ssim;
            }
            const double pmean = psum / rows.size(), smean = ssum / rows.size();
            out << std::left << std::setw(20) << "mean" << std::right << std::setw(10) << fmt_db(pmean)
                << std::setw(10) << std::fixed << std::setprecision(4) << smean << "\n";
            if (!eval_csv.empty()) {
                std::ofstream csv(eval_csv);
                if (!csv) throw DataError("cannot write '" + eval_csv + "'");
                csv << "view,psnr,ssim\n";
                for (const auto& r : rows) csv << r.name << ',' << r.psnr << ',' << r.ssim << "\n";
                csv << "mean," << pmean << ',' << smean << "\n";
            }
            return kOk;
        }

        if (*compress) {
            const io::Checkpoint ck = io::load_checkpoint(comp_in);
            codec::BundleOptions bo;
            bo.rvq = rvq;
            bo.threads = comp_threads;
            const codec::CompressedBundle b = codec::compress_model(ck, bo);
            codec::save_bundle(comp_out, b);
            const auto raw = fs::file_size(comp_in);
            out << "checkpoint " << raw << " bytes -> bundle " << b.bytes.size() << " bytes ("
                << std::fixed << std::setprecision(3) << double(b.bytes.size()) / double(raw) << "x)\n";
            for (const auto& sec : b.sections) out << "  " << std::left << std::setw(12) << sec.name << sec.size << "\n";
            return kOk;
        }

        if (*decompress) {
            io::save_checkpoint(dec_out, codec::load_bundle(dec_in));
            log->info("wrote {}", dec_out);
            return kOk;
        }

        if (*synth) {
            synth_spec.height = synth_spec.width;
            const io::SynthScene scene = io::synth_scene(synth_spec);
            io::write_synth(scene, synth_spec, synth_out);
            log->info("wrote {} views and {} ground-truth Gaussians to {}", scene.data.views.size(),
                      scene.model.gaussians.size(), synth_out);
            log->info("train with --config {}", (fs::path(synth_out) / "synth.cfg").string());
            return kOk;
        }
    } catch (const DivergenceError& e) {
        log->error("{}", e.what());
        return kDiverged;
    } catch (const ConfigError& e) {
        log->error("{}", e.what());
        return kUsage;
    } catch (const InvalidInput& e) {
        log->error("{}", e.what());
        return kUsage;
    } catch (const Error& e) {
        log->error("{}", e.what());
        return kDataError;
    } catch (const std::filesystem::filesystem_error& e) {
        log->error("{}", e.what());
        return kDataError;
    }
    return kUsage;
}

}  // namespace hyrf::cli
