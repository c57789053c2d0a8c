#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "hyrf/error.hpp"
#include "hyrf/io/synth.hpp"
#include "hyrf/pipeline.hpp"
#include "hyrf/renderer.hpp"
#include "oracles.hpp"
#include "scenes.hpp"

using namespace hyrf;

namespace {

double max_abs_diff(const Image& a, const Image& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) m = std::max(m, std::abs(a.data[i] - b.data[i]));
    return m;
}

ActivatedGaussian on_axis(double opacity, Eigen::Vector3d color) {
    ActivatedGaussian g;
    g.position = Eigen::Vector3d::Zero();
    g.scale = Eigen::Vector3d::Constant(0.2);
    g.opacity = opacity;
    g.color = color;
    return g;
}

// Odd size so the optical axis passes through a pixel center.
Camera axis_camera() { return Camera::look_at({0, 0, -3}, {0, 0, 0}, {0, 1, 0}, 0.9, 15, 15); }

std::vector<double> flat_positions(const std::vector<ActivatedGaussian>& gs) {
    std::vector<double> p;
    for (const auto& g : gs) p.insert(p.end(), g.position.data(), g.position.data() + 3);
    return p;
}

}  // namespace

TEST(Precull, OnAxisKeptBehindCulled) {
    const Camera cam = axis_camera();
    const std::vector<double> pts{0, 0, -3 + 2 * cam.near, 0, 0, -4, 0, 0, -3 + 0.5 * cam.near};
    const CullResult r = precull(pts, cam, 0.15);
    EXPECT_EQ(r.keep_mask, (std::vector<std::uint8_t>{1, 0, 0}));
    EXPECT_EQ(r.kept_indices, (std::vector<std::uint32_t>{0}));
}

TEST(Precull, ToleranceBand) {
    const Camera cam = axis_camera();
    // NDC x = 1.10 at depth 3.
    const double u = 1.10 * cam.width / 2.0 + cam.width / 2.0;
    const Eigen::Vector3d pc((u - cam.cx) / cam.fx * 3.0, 0.0, 3.0);
    const Eigen::Vector3d pw = cam.rotation.transpose() * (pc - cam.translation);
    const std::vector<double> pts{pw.x(), pw.y(), pw.z()};
    EXPECT_EQ(precull(pts, cam, 0.15).kept_indices.size(), 1u);
    EXPECT_EQ(precull(pts, cam, 0.05).kept_indices.size(), 0u);
    EXPECT_THROW(precull(pts, cam, -0.1), InvalidInput);
}

TEST(Precull, MaskMatchesIndices) {
    std::mt19937_64 rng(1);
    scenes::ActivatedSceneSpec spec;
    spec.count = 200;
    spec.spread = 3.0;
    const auto gs = scenes::random_activated(rng, spec);
    const Camera cam = scenes::orbit_camera(rng, 3.0, {0, 0, 0}, 32, 24);
    const CullResult r = precull(flat_positions(gs), cam, 0.15);
    std::size_t count = 0;
    for (auto m : r.keep_mask) count += m;
    EXPECT_EQ(count, r.kept_indices.size());
    for (auto i : r.kept_indices) EXPECT_TRUE(r.keep_mask[i]);
}

TEST(Rasterize, EmptyScene) {
    const Camera cam = axis_camera();
    const RenderTarget t = rasterize({}, cam);
    for (double v : t.color.data) EXPECT_EQ(v, 0.0);
    for (double v : t.transmittance.data) EXPECT_EQ(v, 1.0);
}

TEST(Rasterize, SingleGaussianAtMean) {
    const Camera cam = axis_camera();
    const std::vector<ActivatedGaussian> gs{on_axis(0.6, {1, 0, 0})};
    const RenderTarget t = rasterize(gs, cam);
    EXPECT_NEAR(t.color.at(7, 7, 0), 0.6, 1e-15);
    EXPECT_EQ(t.color.at(7, 7, 1), 0.0);
    EXPECT_EQ(t.color.at(7, 7, 2), 0.0);
    EXPECT_NEAR(t.transmittance.at(7, 7), 0.4, 1e-15);
}

TEST(Rasterize, CoincidentPairFrontFirst) {
    const Camera cam = axis_camera();
    const std::vector<ActivatedGaussian> gs{on_axis(0.5, {1, 0, 0}), on_axis(0.5, {0, 1, 0})};
    const RenderTarget t = rasterize(gs, cam);
    EXPECT_NEAR(t.color.at(7, 7, 0), 0.5, 1e-15);
    EXPECT_NEAR(t.color.at(7, 7, 1), 0.25, 1e-15);
    EXPECT_EQ(t.color.at(7, 7, 2), 0.0);
    EXPECT_NEAR(t.transmittance.at(7, 7), 0.25, 1e-15);
}

TEST(Rasterize, MatchesBruteForceBlend) {
    std::mt19937_64 rng(2);
    std::uniform_int_distribution<int> count(0, 20);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        scenes::ActivatedSceneSpec spec;
        spec.count = count(rng);
        const auto gs = scenes::random_activated(rng, spec);
        const Camera cam = scenes::orbit_camera(rng, 3.0, {0, 0, 0}, 16, 16);
        const RenderTarget t = rasterize(gs, cam);
        Image color, trans;
        oracle::blend(gs, cam, color, trans);
        worst = std::max({worst, max_abs_diff(t.color, color), max_abs_diff(t.transmittance, trans)});
    }
    EXPECT_LT(worst, 1e-6);
}

TEST(Rasterize, ThreadsDoNotChangeForward) {
    std::mt19937_64 rng(3);
    scenes::ActivatedSceneSpec spec;
    spec.count = 60;
    const auto gs = scenes::random_activated(rng, spec);
    const Camera cam = scenes::orbit_camera(rng, 3.0, {0, 0, 0}, 48, 40);
    const RenderTarget a = rasterize(gs, cam, 1), b = rasterize(gs, cam, 4), c = rasterize(gs, cam, 1);
    EXPECT_EQ(a.color.data, b.color.data);
    EXPECT_EQ(a.transmittance.data, b.transmittance.data);
    EXPECT_EQ(a.color.data, c.color.data);
}

TEST(Rasterize, TransmittanceBoundedAndMonotone) {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        scenes::ActivatedSceneSpec spec;
        spec.count = 15;
        auto gs = scenes::random_activated(rng, spec);
        const Camera cam = scenes::orbit_camera(rng, 3.0, {0, 0, 0}, 24, 24);
        const RenderTarget before = rasterize(gs, cam);
        gs.push_back(scenes::random_activated(rng, spec)[0]);
        const RenderTarget after = rasterize(gs, cam);
        for (std::size_t i = 0; i < before.transmittance.data.size(); ++i) {
            const double t0 = before.transmittance.data[i], t1 = after.transmittance.data[i];
            ASSERT_GE(t1, 0.0);
            ASSERT_LE(t0, 1.0);
            ASSERT_LE(t1, t0 + 1e-15);
        }
    }
}

TEST(Rasterize, SplatRadius) {
    EXPECT_EQ(splat_radius(1.0 / 256.0, 4.0), 0.0);
    EXPECT_NEAR(splat_radius(0.5, 4.0), std::sqrt(2.0 * std::log(0.5 * 255.0) * 4.0), 1e-12);
}

TEST(RasterizeBackward, ZeroUpstream) {
    std::mt19937_64 rng(5);
    const auto gs = scenes::random_activated(rng, {});
    const Camera cam = scenes::orbit_camera(rng, 3.0, {0, 0, 0}, 8, 8);
    RasterCache cache;
    rasterize(gs, cam, 1, &cache);
    const RasterGrad g = rasterize_backward(gs, cam, cache, Image(8, 8, 3, 0.0), nullptr);
    for (const auto& ag : g.gaussians) {
        EXPECT_EQ(ag.opacity, 0.0);
        EXPECT_TRUE(ag.color.isZero(0.0));
        EXPECT_TRUE(ag.position.isZero(0.0));
        EXPECT_TRUE(ag.scale.isZero(0.0));
        EXPECT_TRUE(ag.rotation.isZero(0.0));
    }
}

TEST(RasterizeBackward, SingleGaussianPixel) {
    const Camera cam = axis_camera();
    const std::vector<ActivatedGaussian> gs{on_axis(0.6, {0.2, 0.5, 0.9})};
    RasterCache cache;
    rasterize(gs, cam, 1, &cache);
    Image up(15, 15, 3, 0.0);
    up.at(7, 7, 0) = 1.0;
    const RasterGrad g = rasterize_backward(gs, cam, cache, up, nullptr);
    EXPECT_NEAR(g.gaussians[0].opacity, 0.2, 1e-15);
    EXPECT_NEAR(g.gaussians[0].color[0], 0.6, 1e-15);
    EXPECT_EQ(g.gaussians[0].color[1], 0.0);
}

TEST(RasterizeBackward, StaleCacheRejected) {
    std::mt19937_64 rng(6);
    auto gs = scenes::random_activated(rng, {});
    const Camera cam = scenes::orbit_camera(rng, 3.0, {0, 0, 0}, 8, 8);
    RasterCache cache;
    rasterize(gs, cam, 1, &cache);
    gs.pop_back();
    EXPECT_THROW(rasterize_backward(gs, cam, cache, Image(8, 8, 3, 0.0), nullptr), ContractViolation);
}

TEST(RasterizeBackward, MatchesFiniteDifferences) {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> n;
    double worst = 0.0;
    int checked = 0, kinks = 0;
    for (int trial = 0; trial < 20; ++trial) {
        scenes::ActivatedSceneSpec spec;
        spec.count = 5;
        spec.spread = 0.4;
        spec.scale_lo = 0.2;
        spec.scale_hi = 0.5;
        spec.opacity_lo = 0.2;
        spec.opacity_hi = 0.8;
        auto gs = scenes::random_activated(rng, spec);
        const Camera cam = scenes::orbit_camera(rng, 3.0, {0, 0, 0}, 8, 8);
        Image w(8, 8, 3);
        for (double& v : w.data) v = n(rng);
        Image bg(8, 8, 3);
        for (double& v : bg.data) v = std::abs(n(rng));
        auto loss = [&] {
            const RenderTarget t = rasterize(gs, cam);
            double s = 0.0;
            for (std::size_t i = 0; i < w.data.size(); ++i) {
                s += w.data[i] * (t.color.data[i] + t.transmittance.data[i / 3] * bg.data[i]);
            }
            return s;
        };
        RasterCache cache;
        rasterize(gs, cam, 1, &cache);
        const RasterGrad g = rasterize_backward(gs, cam, cache, w, &bg);
        constexpr double h = 1e-4;
        for (std::size_t i = 0; i < gs.size(); ++i) {
            const ActivatedGrad& ag = g.gaussians[i];
            auto cmp = [&](double analytic, double& x) {
                ++checked;
                const auto fd = oracle::smooth_difference(loss, x, h);
                if (!fd) {
                    ++kinks;
                    return;
                }
                worst = std::max(worst, oracle::rel_error(analytic, *fd, 1e-4));
            };
            cmp(ag.opacity, gs[i].opacity);
            for (int k = 0; k < 3; ++k) {
                cmp(ag.color[k], gs[i].color[k]);
                cmp(ag.position[k], gs[i].position[k]);
                cmp(ag.scale[k], gs[i].scale[k]);
            }
            // The forward pass renormalizes, so only the tangential part is observable.
            const Eigen::Vector4d q = gs[i].rotation.as_vector();
            const Eigen::Vector4d gr = ag.rotation - q * q.dot(ag.rotation);
            cmp(gr[0], gs[i].rotation.w);
            cmp(gr[1], gs[i].rotation.x);
            cmp(gr[2], gs[i].rotation.y);
            cmp(gr[3], gs[i].rotation.z);
        }
    }
    EXPECT_LT(worst, 1e-3);
    EXPECT_LT(kinks * 50, checked);
}

class BackgroundTest : public ::testing::Test {
protected:
    HyrfModel model = scenes::small_model(3, 0);
    Camera cam = Camera::look_at({0, 0, -3}, {0, 0, 0}, {0, 1, 0}, 0.9, 9, 7);
};

TEST_F(BackgroundTest, EmptyForegroundShowsSphereColor) {
    RenderTarget fg{Image(9, 7, 3, 0.0), Image(9, 7, 1, 1.0)};
    const BackgroundField bf = background_field(model, {});
    const Image out = composite_background(fg, cam, bf);
    for (int y = 0; y < 7; ++y)
        for (int x = 0; x < 9; ++x) {
            const Eigen::Vector3d c = shade_background(cam.pixel_ray(x, y), bf);
            for (int k = 0; k < 3; ++k) {
                EXPECT_EQ(out.at(x, y, k), c[k]);
                EXPECT_GT(c[k], 0.0);
                EXPECT_LT(c[k], 1.0);
            }
        }
}

TEST_F(BackgroundTest, OpaquePixelKeepsForeground) {
    RenderTarget fg{Image(9, 7, 3, 0.25), Image(9, 7, 1, 0.0)};
    const Image out = composite_background(fg, cam, background_field(model, {}));
    EXPECT_EQ(out.data, fg.color.data);
}

TEST_F(BackgroundTest, ArithmeticExample) {
    // Saturated output bias pushes the sphere color to 1.
    const int last = model.color_decoder.n_layers() - 1;
    for (std::size_t i = model.color_decoder.weight_offset(last); i < model.color_decoder.params().size(); ++i) {
        model.color_decoder.params()[i] = 0.0;
    }
    for (int k = 0; k < 3; ++k) model.color_decoder.params()[model.color_decoder.bias_offset(last) + k] = 40.0;
    RenderTarget fg{Image(9, 7, 3, 0.0), Image(9, 7, 1, 0.3)};
    for (std::size_t p = 0; p < fg.color.pixel_count(); ++p) fg.color.data[3 * p] = 0.2;
    const Image out = composite_background(fg, cam, background_field(model, {}));
    EXPECT_NEAR(out.at(4, 3, 0), 0.5, 1e-12);
    EXPECT_NEAR(out.at(4, 3, 1), 0.3, 1e-12);
    EXPECT_NEAR(out.at(4, 3, 2), 0.3, 1e-12);
}

TEST_F(BackgroundTest, ThresholdSkipsLowTransmittance) {
    RenderTarget fg{Image(9, 7, 3, 0.0), Image(9, 7, 1, 0.2)};
    fg.transmittance.at(0, 0) = 0.2000001;
    BackgroundCache cache;
    const Image out = composite_background(fg, cam, background_field(model, {}), 1, &cache);
    EXPECT_EQ(cache.pixels, (std::vector<std::uint32_t>{0}));
    EXPECT_GT(out.at(0, 0, 0), 0.0);
    EXPECT_EQ(out.at(1, 0, 0), 0.0);
}

TEST_F(BackgroundTest, CameraOutsideSphereIsConfigError) {
    const Camera far = Camera::look_at({0, 0, -200}, {0, 0, 0}, {0, 1, 0}, 0.9, 9, 7);
    RenderTarget fg{Image(9, 7, 3, 0.0), Image(9, 7, 1, 1.0)};
    EXPECT_THROW(composite_background(fg, far, background_field(model, {})), ConfigError);
}

TEST(Frame, CullingIsLossless) {
    // Toy-scale scenes: footprints stay well inside the tolerance band.
    double worst = 0.0;
    std::size_t culled = 0;
    for (int trial = 0; trial < 20; ++trial) {
        io::SynthSpec spec;
        spec.seed = 100 + trial;
        spec.n_cameras = 1;
        const HyrfModel m = io::synth_scene(spec).model;
        std::mt19937_64 rng(trial);
        std::normal_distribution<double> n(0.0, 0.5);
        const Camera cam = scenes::orbit_camera(rng, spec.orbit_radius, {n(rng), n(rng), n(rng)}, 64, 64);
        RenderOptions on, off;
        off.cull = false;
        const FrameResult a = render_frame(m, cam, on), b = render_frame(m, cam, off);
        worst = std::max(worst, max_abs_diff(a.image, b.image));
        culled += b.stats.kept - a.stats.kept;
    }
    EXPECT_LE(worst, 1e-6);
    EXPECT_GT(culled, 0u);
}

TEST(Frame, OversizedFootprintsDefeatTheBand) {
    // Large Gaussians close to the camera reach into the image from far
    // outside the band, so culling is only lossless at toy scales.
    HyrfModel m = scenes::small_model(101, 80);
    m.config.s_max = 0.5;
    std::mt19937_64 rng(1);
    const Camera cam = scenes::orbit_camera(rng, 1.6, {0.8, 0, 0}, 32, 32);
    RenderOptions on, off;
    off.cull = false;
    EXPECT_GT(max_abs_diff(render_frame(m, cam, on).image, render_frame(m, cam, off).image), 1e-6);
}

TEST(Frame, EnergyBound) {
    for (int trial = 0; trial < 10; ++trial) {
        HyrfModel m = scenes::small_model(200 + trial, 100);
        std::mt19937_64 rng(trial);
        const Camera cam = scenes::orbit_camera(rng, 2.5, {0, 0, 0}, 32, 32);
        RenderOptions opts;
        opts.tau_t = 0.0;
        const FrameResult r = render_frame(m, cam, opts);
        for (double v : r.image.data) {
            ASSERT_LE(v, 1.0 + 1e-6);
            ASSERT_GE(v, 0.0);
        }
    }
}

TEST(Frame, BackgroundSkipBound) {
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
        HyrfModel m = scenes::small_model(300 + trial, 150);
        std::mt19937_64 rng(trial);
        const Camera cam = scenes::orbit_camera(rng, 2.5, {0, 0, 0}, 32, 32);
        RenderOptions skip, full;
        skip.tau_t = 0.2;
        full.tau_t = 0.0;
        worst = std::max(worst, max_abs_diff(render_frame(m, cam, skip).image, render_frame(m, cam, full).image));
    }
    EXPECT_LE(worst, 0.2);
    EXPECT_GT(worst, 0.0);
}

TEST(Frame, SingleThreadBitwiseReproducible) {
    HyrfModel m = scenes::small_model(9, 60);
    std::mt19937_64 rng(9);
    const Camera cam = scenes::orbit_camera(rng, 2.5, {0, 0, 0}, 24, 24);
    Image up(24, 24, 3);
    std::normal_distribution<double> n;
    for (double& v : up.data) v = n(rng);
    auto run = [&] {
        HyrfModel c = m;
        FrameCache cache;
        const FrameResult r = render_frame(c, cam, {}, &cache);
        backward_frame(c, cam, cache, up);
        return std::make_pair(r.image.data, std::vector<double>(c.radiance.grads().begin(), c.radiance.grads().end()));
    };
    EXPECT_EQ(run(), run());
}
