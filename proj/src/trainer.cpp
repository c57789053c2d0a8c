#include "hyrf/trainer.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "hyrf/error.hpp"
#include "hyrf/io/checkpoint.hpp"

namespace hyrf {

void TrainConfig::validate() const {
    if (iterations < 0) throw InvalidInput("iterations must be >= 0");
    if (!(lambda_ssim >= 0.0 && lambda_ssim <= 1.0)) {
        throw InvalidInput("lambda_ssim must lie in [0, 1]");
    }
    lr.validate();
    if (densify_interval < 1) throw InvalidInput("densify_interval must be >= 1");
    if (opacity_reset_interval < 0) throw InvalidInput("opacity_reset_interval must be >= 0");
    if (!(opacity_reset_value > 0.0 && opacity_reset_value < 1.0)) {
        throw InvalidInput("opacity_reset_value must lie in (0, 1)");
    }
    if (!(prune_opacity >= 0.0 && prune_opacity < 1.0)) {
        throw InvalidInput("prune_opacity must lie in [0, 1)");
    }
    if (!(split_factor > 1.0)) throw InvalidInput("split_factor must exceed 1");
    if (render.threads < 1) throw InvalidInput("threads must be >= 1");
}

namespace {

std::string divergence_report(const HyrfModel& m, int iteration, const LossValue& v) {
    std::ostringstream os;
    os << "non-finite loss at iteration " << iteration << " (total " << v.total << ", l1 " << v.l1
       << ", ssim " << v.ssim << "); " << m.gaussians.size() << " gaussians";
    std::size_t bad = 0;
    for (double x : m.gaussians.positions.value) bad += std::isfinite(x) ? 0 : 1;
    for (double x : m.gaussians.colors.value) bad += std::isfinite(x) ? 0 : 1;
    for (double x : m.gaussians.scales.value) bad += std::isfinite(x) ? 0 : 1;
    for (double x : m.gaussians.opacities.value) bad += std::isfinite(x) ? 0 : 1;
    os << ", " << bad << " non-finite explicit values";
    std::size_t bad_dec = 0;
    for (double x : m.geometry_decoder.params()) bad_dec += std::isfinite(x) ? 0 : 1;
    for (double x : m.color_decoder.params()) bad_dec += std::isfinite(x) ? 0 : 1;
    os << ", " << bad_dec << " non-finite decoder weights";
    return os.str();
}

}  // namespace

LossValue loss_and_backward(HyrfModel& model, const Camera& cam, const Image& gt,
                            const TrainConfig& cfg, Image* rendered, int iteration) {
    if (!gt.same_shape(Image(cam.width, cam.height, 3))) {
        throw InvalidInput("ground-truth image does not match the camera");
    }
    model.zero_grad();
    FrameCache cache;
    FrameResult fr = render_frame(model, cam, cfg.render, &cache);
    Image grad;
    const LossValue v = photometric_loss(fr.image, gt, cfg.lambda_ssim, cfg.ssim, &grad);
    if (!std::isfinite(v.total)) throw DivergenceError(divergence_report(model, iteration, v));
    backward_frame(model, cam, cache, grad, cfg.render);
    if (rendered) *rendered = std::move(fr.image);
    return v;
}

StepMetrics train_step(HyrfModel& model, Optimizer& opt, const Camera& cam, const Image& gt,
                       const TrainConfig& cfg, int iteration, double extent, std::mt19937_64& rng) {
    Image rendered;
    const LossValue v = loss_and_backward(model, cam, gt, cfg, &rendered, iteration);
    opt.step(model, cfg.lr, extent);

    StepMetrics m;
    m.iteration = iteration;
    m.loss = v.total;
    m.l1 = v.l1;
    m.ssim = v.ssim;
    m.psnr = psnr(rendered, gt);

    auto& gs = model.gaussians;
    const bool in_window = iteration < cfg.densify_until;
    if (in_window && iteration > cfg.densify_from && iteration % cfg.densify_interval == 0) {
        DensifyOptions d;
        d.grad_threshold = cfg.densify_grad_threshold;
        d.scale_split_threshold = cfg.percent_dense * extent;
        d.split_factor = cfg.split_factor;
        const auto act = activate_geometry(model);
        const DensifyResult dr = densify(gs, act, model.config.s_max, d, rng);
        m.cloned = dr.cloned;
        m.split = dr.split;
        const auto after = activate_geometry(model);
        std::vector<double> alpha(after.size());
        for (std::size_t i = 0; i < after.size(); ++i) alpha[i] = after[i].opacity;
        m.pruned = prune(gs, alpha, cfg.prune_opacity);
    }
    if (in_window && cfg.opacity_reset_interval > 0 && iteration % cfg.opacity_reset_interval == 0) {
        reset_opacity(gs, cfg.opacity_reset_value);
        m.opacity_reset = true;
    }
    m.n_gaussians = gs.size();
    return m;
}

Trainer::Trainer(HyrfModel& model, std::vector<const View*> views, TrainConfig cfg)
    : model_(model), views_(std::move(views)), cfg_(cfg), rng_(cfg.seed) {
    cfg_.validate();
    if (views_.empty()) throw InvalidInput("trainer needs at least one training view");
    if (model_.gaussians.size() == 0) throw InvalidInput("trainer needs an initialized model");
    std::vector<Camera> cams;
    for (const View* v : views_) cams.push_back(v->camera);
    extent_ = camera_extent(cams);
    opt_ = Optimizer(model_, cfg_.adam);
    order_.resize(views_.size());
}

StepMetrics Trainer::step() {
    if (cursor_ == 0) {
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        std::shuffle(order_.begin(), order_.end(), rng_);
    }
    const View* v = views_[order_[cursor_]];
    cursor_ = (cursor_ + 1) % order_.size();
    ++iteration_;
    return train_step(model_, opt_, v->camera, v->image, cfg_, iteration_, extent_, rng_);
}

std::vector<EvalRow> evaluate(const HyrfModel& model, const std::vector<const View*>& views,
                              const RenderOptions& opts) {
    std::vector<EvalRow> rows;
    for (const View* v : views) {
        const FrameResult fr = render_frame(model, v->camera, opts);
        rows.push_back({v->name, psnr(fr.image, v->image), ssim(fr.image, v->image)});
    }
    return rows;
}

FitResult fit(HyrfModel& model, const Dataset& data, const TrainConfig& cfg,
              const FitOptions& opts) {
    namespace fs = std::filesystem;
    if (opts.out_dir.empty()) throw InvalidInput("fit: output directory is required");
    if (opts.log_interval < 1) throw InvalidInput("fit: log_interval must be >= 1");
    fs::create_directories(opts.out_dir);

    FitResult res;
    res.metrics_path = (fs::path(opts.out_dir) / "metrics.csv").string();
    res.checkpoint_path = (fs::path(opts.out_dir) / "checkpoint.bin").string();
    std::ofstream csv(res.metrics_path, std::ios::trunc);
    if (!csv) throw DataError("cannot write '" + res.metrics_path + "'");
    csv << "iteration,loss,psnr,n_gaussians,wall_time\n";

    io::Checkpoint ck;
    ck.cameras = io::camera_records(data);
    auto save = [&](const std::string& path, int iteration) {
        ck.iteration = static_cast<std::uint32_t>(iteration);
        ck.model = model;
        io::save_checkpoint(path, ck);
    };

    Trainer trainer(model, data.train_views(), cfg);
    const auto t0 = std::chrono::steady_clock::now();
    for (int it = 1; it <= cfg.iterations; ++it) {
        if (opts.stop && opts.stop->load()) {
            res.interrupted = true;
            break;
        }
        try {
            res.last = trainer.step();
        } catch (const DivergenceError& e) {
            std::ofstream diag(fs::path(opts.out_dir) / "divergence.txt");
            diag << e.what() << "\n";
            csv.flush();
            throw;
        }
        res.iterations = it;
        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (it % opts.log_interval == 0) {
            csv << it << ',' << res.last.loss << ',' << res.last.psnr << ','
                << res.last.n_gaussians << ',' << wall << '\n';
            csv.flush();
            if (opts.on_log) opts.on_log(res.last, wall);
        }
        if (opts.checkpoint_interval > 0 && it % opts.checkpoint_interval == 0 &&
            it != cfg.iterations) {
            save((fs::path(opts.out_dir) / ("checkpoint_" + std::to_string(it) + ".bin")).string(),
                 it);
        }
    }
    csv.flush();
    save(res.checkpoint_path, res.iterations);
    return res;
}

}  // namespace hyrf
