#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "checks.hpp"
#include "hyrf/error.hpp"
#include "hyrf/io/checkpoint.hpp"
#include "hyrf/io/config.hpp"
#include "hyrf/metrics.hpp"
#include "hyrf/optimizer.hpp"
#include "hyrf/trainer.hpp"
#include "scenes.hpp"

using namespace hyrf;
namespace fs = std::filesystem;

namespace {

Image random_image(int w, int h, std::mt19937_64& rng) {
    Image im(w, h, 3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (double& v : im.data) v = u(rng);
    return im;
}

fs::path scratch_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("hyrf_trainer_" + name);
    fs::remove_all(p);
    return p;
}

struct Snapshot {
    std::vector<double> pos, col, scale, opa, rad, geo, gdec, cdec;
    explicit Snapshot(const HyrfModel& m)
        : pos(m.gaussians.positions.value), col(m.gaussians.colors.value), scale(m.gaussians.scales.value),
          opa(m.gaussians.opacities.value), rad(m.radiance.params().begin(), m.radiance.params().end()),
          geo(m.geometry.params().begin(), m.geometry.params().end()),
          gdec(m.geometry_decoder.params().begin(), m.geometry_decoder.params().end()),
          cdec(m.color_decoder.params().begin(), m.color_decoder.params().end()) {}
};

}  // namespace

TEST(Loss, IdenticalImagesGiveZero) {
    std::mt19937_64 rng(1);
    const Image a = random_image(20, 14, rng);
    const LossValue v = photometric_loss(a, a, 0.2);
    EXPECT_EQ(v.l1, 0.0);
    EXPECT_NEAR(v.ssim, 1.0, 1e-12);
    EXPECT_NEAR(v.total, 0.0, 1e-12);
}

TEST(Loss, LambdaZeroIsL1) {
    std::mt19937_64 rng(2);
    const Image a = random_image(12, 12, rng), b = random_image(12, 12, rng);
    const LossValue v = photometric_loss(a, b, 0.0);
    EXPECT_EQ(v.total, v.l1);
    EXPECT_EQ(v.l1, l1_error(a, b));
}

TEST(Loss, ConstantImagesClosedForm) {
    const Image zero(16, 16, 3, 0.0), one(16, 16, 3, 1.0);
    const LossValue v = photometric_loss(zero, one, 0.2);
    EXPECT_EQ(v.l1, 1.0);
    const double closed = kSsimC1 / (1.0 + kSsimC1);
    EXPECT_NEAR(v.ssim, closed, 1e-15);
    EXPECT_NEAR(closed, 9.999e-5, 1e-8);
    EXPECT_NEAR(v.total, 0.8 + 0.2 * (1.0 - closed), 1e-15);
}

TEST(Loss, ShapeMismatchRejected) {
    EXPECT_THROW(photometric_loss(Image(4, 4, 3), Image(4, 5, 3), 0.2), InvalidInput);
}

TEST(Loss, NonNegative) {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 50; ++i) {
        const Image a = random_image(9, 7, rng), b = random_image(9, 7, rng);
        EXPECT_GT(photometric_loss(a, b, 0.2).total, 0.0);
    }
}

TEST(Loss, GradientMatchesFiniteDifferences) {
    std::mt19937_64 rng(4);
    Image a = random_image(7, 6, rng);
    const Image b = random_image(7, 6, rng);
    Image grad;
    photometric_loss(a, b, 0.2, {}, &grad);
    for (std::size_t i = 0; i < a.data.size(); i += 5) {
        const double fd = oracle::central_difference([&] { return photometric_loss(a, b, 0.2).total; }, a.data[i], 1e-6);
        EXPECT_LT(oracle::rel_error(grad.data[i], fd, 1e-6), 1e-4);
    }
}

TEST(Ssim, SelfAndSymmetry) {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 20; ++i) {
        const Image a = random_image(13, 17, rng), b = random_image(13, 17, rng);
        EXPECT_NEAR(ssim(a, a), 1.0, 1e-9);
        EXPECT_NEAR(ssim(a, b), ssim(b, a), 1e-9);
    }
}

TEST(Ssim, BadWindowRejected) {
    SsimOptions o;
    o.window = 4;
    EXPECT_THROW(ssim(Image(8, 8, 3), Image(8, 8, 3), o), InvalidInput);
}

TEST(Psnr, Examples) {
    const Image a(8, 8, 3, 0.25);
    EXPECT_TRUE(std::isinf(psnr(a, a)));
    EXPECT_GT(psnr(a, a), 0.0);
    EXPECT_EQ(psnr_from_mse(0.01), 20.0);
    EXPECT_EQ(psnr_from_mse(1.0), 0.0);
    const Image b(8, 8, 3, 0.35);
    EXPECT_NEAR(psnr(a, b), 20.0, 1e-12);
}

TEST(Optimizer, ZeroGradientLeavesParameters) {
    HyrfModel m = scenes::small_model(1, 10);
    Optimizer opt(m, {});
    const Snapshot before(m);
    m.zero_grad();
    opt.step(m, LearningRates{}, 1.0);
    const Snapshot after(m);
    EXPECT_EQ(before.pos, after.pos);
    EXPECT_EQ(before.col, after.col);
    EXPECT_EQ(before.rad, after.rad);
    EXPECT_EQ(before.gdec, after.gdec);
}

TEST(Optimizer, UpdatedValuesStayFloat) {
    HyrfModel m = scenes::small_model(2, 10);
    std::mt19937_64 rng(2);
    const Camera cam = scenes::orbit_camera(rng, 2.5, {0, 0, 0}, 12, 12);
    TrainConfig cfg;
    loss_and_backward(m, cam, random_image(12, 12, rng), cfg);
    Optimizer opt(m, {});
    opt.step(m, cfg.lr, 1.0);
    for (double v : m.gaussians.positions.value) ASSERT_EQ(v, double(float(v)));
    for (double v : m.radiance.params()) ASSERT_EQ(v, double(float(v)));
    for (double v : m.color_decoder.params()) ASSERT_EQ(v, double(float(v)));
}

TEST(TrainStep, ZeroLearningRatesChangeNothing) {
    HyrfModel m = scenes::small_model(3, 20);
    std::mt19937_64 rng(3);
    const Camera cam = scenes::orbit_camera(rng, 2.5, {0, 0, 0}, 16, 16);
    const Image gt = random_image(16, 16, rng);
    TrainConfig cfg;
    cfg.lr.position = cfg.lr.position_final = 0.0;
    cfg.lr.explicit_attributes = cfg.lr.hash_tables = cfg.lr.decoders = 0.0;
    Optimizer opt(m, cfg.adam);
    const Snapshot before(m);
    const StepMetrics s = train_step(m, opt, cam, gt, cfg, 1, 1.0, rng);
    const Snapshot after(m);
    EXPECT_GT(s.loss, 0.0);
    EXPECT_EQ(before.pos, after.pos);
    EXPECT_EQ(before.col, after.col);
    EXPECT_EQ(before.scale, after.scale);
    EXPECT_EQ(before.opa, after.opa);
    EXPECT_EQ(before.rad, after.rad);
    EXPECT_EQ(before.geo, after.geo);
    EXPECT_EQ(before.gdec, after.gdec);
    EXPECT_EQ(before.cdec, after.cdec);
}

TEST(TrainStep, OpacityResetIsIsolated) {
    HyrfModel m = scenes::small_model(4, 20);
    for (double& o : m.gaussians.opacities.value) o = 3.0;
    std::mt19937_64 rng(4);
    const Camera cam = scenes::orbit_camera(rng, 2.5, {0, 0, 0}, 16, 16);
    const Image gt = random_image(16, 16, rng);
    TrainConfig cfg;
    cfg.opacity_reset_interval = 3;
    cfg.densify_from = 1000;

    // The same step with and without the reset differs only in opacity.
    HyrfModel a = m, b = m;
    Optimizer oa(a, cfg.adam), ob(b, cfg.adam);
    std::mt19937_64 ra(9), rb(9);
    const StepMetrics sa = train_step(a, oa, cam, gt, cfg, 3, 1.0, ra);
    TrainConfig no_reset = cfg;
    no_reset.opacity_reset_interval = 0;
    train_step(b, ob, cam, gt, no_reset, 3, 1.0, rb);
    EXPECT_TRUE(sa.opacity_reset);
    const Snapshot x(a), y(b);
    EXPECT_EQ(x.pos, y.pos);
    EXPECT_EQ(x.col, y.col);
    EXPECT_EQ(x.scale, y.scale);
    EXPECT_EQ(x.rad, y.rad);
    EXPECT_EQ(x.geo, y.geo);
    EXPECT_EQ(x.gdec, y.gdec);
    EXPECT_EQ(x.cdec, y.cdec);
    EXPECT_NE(x.opa, y.opa);
    for (double o : x.opa) EXPECT_LE(o, logit(0.01));
}

TEST(TrainStep, NonFiniteLossIsDivergence) {
    HyrfModel m = scenes::small_model(5, 5);
    std::mt19937_64 rng(5);
    const Camera cam = scenes::orbit_camera(rng, 2.5, {0, 0, 0}, 8, 8);
    Image gt = random_image(8, 8, rng);
    gt.data[3] = std::nan("");
    TrainConfig cfg;
    Optimizer opt(m, cfg.adam);
    EXPECT_THROW(train_step(m, opt, cam, gt, cfg, 1, 1.0, rng), DivergenceError);
}

TEST(TrainStep, OverfitsSingleView) {
    io::SynthSpec spec;
    spec.n_gaussians = 50;
    spec.n_cameras = 1;
    spec.width = spec.height = 16;
    const io::SynthScene sc = io::synth_scene(spec);
    io::RunSettings rs;
    rs.scene_class = SceneClass::Synthetic;
    HyrfModel m = io::build_model(rs, sc.data);
    ASSERT_EQ(m.gaussians.size(), 50u);
    const View& v = sc.data.views[0];
    TrainConfig cfg;
    cfg.densify_from = 1000;
    cfg.opacity_reset_interval = 0;
    Optimizer opt(m, cfg.adam);
    std::mt19937_64 rng(6);
    double first = 0.0, last = 0.0;
    for (int it = 1; it <= 200; ++it) {
        const StepMetrics s = train_step(m, opt, v.camera, v.image, cfg, it, 1.0, rng);
        if (it == 1) first = s.loss;
        last = s.loss;
    }
    EXPECT_LT(last, 0.25 * first);
}

TEST(Gradients, EndToEndMicroScene) {
    const checks::GradientReport r = checks::micro_gradient_check(11);
    EXPECT_LT(r.max_rel_error, 1e-3);
    EXPECT_LT(r.kinks * 50, r.checked);
    for (std::size_t g : r.groups) EXPECT_GT(g, 0u);
}

TEST(Gradients, BackgroundPathReachesRadianceField) {
    HyrfModel m = scenes::small_model(7, 1);
    m.gaussians.opacities.value[0] = -20.0;
    const Camera cam = Camera::look_at({0, -2.5, 0.8}, {0, 0, 0}, {0, 0, 1}, 0.9, 6, 6);
    std::mt19937_64 rng(7);
    TrainConfig cfg;
    cfg.render.tau_t = 0.0;
    loss_and_backward(m, cam, random_image(6, 6, rng), cfg);
    double sum = 0.0;
    for (double g : m.radiance.grads()) sum += std::abs(g);
    EXPECT_GT(sum, 0.0);
}

TEST(Fit, ZeroIterationsWritesInitialCheckpoint) {
    io::SynthSpec spec;
    spec.n_gaussians = 8;
    spec.width = spec.height = 16;
    spec.n_cameras = 3;
    const io::SynthScene sc = io::synth_scene(spec);
    HyrfModel m = sc.model;
    const fs::path dir = scratch_dir("zero");
    TrainConfig cfg;
    cfg.iterations = 0;
    FitOptions fo;
    fo.out_dir = dir.string();
    const FitResult r = fit(m, sc.data, cfg, fo);
    EXPECT_EQ(r.iterations, 0);
    ASSERT_TRUE(fs::exists(r.checkpoint_path));
    const io::Checkpoint ck = io::load_checkpoint(r.checkpoint_path);
    EXPECT_EQ(ck.iteration, 0u);
    EXPECT_EQ(ck.model.gaussians.positions.value, sc.model.gaussians.positions.value);
    fs::remove_all(dir);
}

TEST(Fit, MetricsRowsPerLogInterval) {
    io::SynthSpec spec;
    spec.n_gaussians = 8;
    spec.width = spec.height = 16;
    spec.n_cameras = 3;
    const io::SynthScene sc = io::synth_scene(spec);
    HyrfModel m = sc.model;
    const fs::path dir = scratch_dir("csv");
    TrainConfig cfg;
    cfg.iterations = 12;
    FitOptions fo;
    fo.out_dir = dir.string();
    fo.log_interval = 4;
    const FitResult r = fit(m, sc.data, cfg, fo);
    std::ifstream csv(r.metrics_path);
    std::string line;
    std::getline(csv, line);
    EXPECT_EQ(line, "iteration,loss,psnr,n_gaussians,wall_time");
    int rows = 0;
    while (std::getline(csv, line)) ++rows;
    EXPECT_EQ(rows, 3);
    fs::remove_all(dir);
}

TEST(Fit, StopRequestFlushes) {
    io::SynthSpec spec;
    spec.n_gaussians = 8;
    spec.width = spec.height = 16;
    spec.n_cameras = 3;
    const io::SynthScene sc = io::synth_scene(spec);
    HyrfModel m = sc.model;
    const fs::path dir = scratch_dir("stop");
    std::atomic<bool> stop{true};
    TrainConfig cfg;
    cfg.iterations = 100;
    FitOptions fo;
    fo.out_dir = dir.string();
    fo.stop = &stop;
    const FitResult r = fit(m, sc.data, cfg, fo);
    EXPECT_TRUE(r.interrupted);
    EXPECT_LT(r.iterations, 100);
    EXPECT_TRUE(fs::exists(r.checkpoint_path));
    fs::remove_all(dir);
}

TEST(LearningRates, PositionDecay) {
    LearningRates lr;
    EXPECT_NEAR(lr.position_at(0, 2.0), 2.0 * 1.6e-4, 1e-18);
    EXPECT_NEAR(lr.position_at(lr.position_decay_steps, 2.0), 2.0 * 1.6e-6, 1e-18);
    EXPECT_LT(lr.position_at(100, 1.0), lr.position_at(50, 1.0));
}
