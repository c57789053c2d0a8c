#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "hyrf/dataset.hpp"
#include "hyrf/metrics.hpp"
#include "hyrf/model.hpp"
#include "hyrf/optimizer.hpp"
#include "hyrf/pipeline.hpp"

namespace hyrf {

struct TrainConfig {
    int iterations = 30000;
    double lambda_ssim = 0.2;
    SsimOptions ssim;
    LearningRates lr;
    AdamConfig adam;

    int densify_from = 500;
    int densify_until = 15000;
    int densify_interval = 100;
    double densify_grad_threshold = 2e-4;
    /// Clone/split boundary as a fraction of the camera extent.
    double percent_dense = 0.01;
    double split_factor = 1.6;
    int opacity_reset_interval = 3000;
    double opacity_reset_value = 0.01;
    double prune_opacity = 0.005;

    RenderOptions render;
    std::uint64_t seed = 0;

    void validate() const;
};

struct StepMetrics {
    int iteration = 0;
    double loss = 0.0;
    double l1 = 0.0;
    double ssim = 0.0;
    double psnr = 0.0;
    std::size_t n_gaussians = 0;
    std::size_t cloned = 0;
    std::size_t split = 0;
    std::size_t pruned = 0;
    bool opacity_reset = false;
};

/// Forward, loss, backward and one optimizer update on a single view,
/// followed by whatever density control is scheduled at `iteration`
/// (1-based). Throws DivergenceError on a non-finite loss.
StepMetrics train_step(HyrfModel& model, Optimizer& opt, const Camera& cam, const Image& gt,
                       const TrainConfig& cfg, int iteration, double extent, std::mt19937_64& rng);

/// Loss and gradients only (no update, no density control); the building
/// block of train_step, exposed for gradient checks.
LossValue loss_and_backward(HyrfModel& model, const Camera& cam, const Image& gt,
                            const TrainConfig& cfg, Image* rendered = nullptr, int iteration = 0);

/// Drives train_step over a set of training views in shuffled epochs.
class Trainer {
public:
    Trainer(HyrfModel& model, std::vector<const View*> views, TrainConfig cfg);

    StepMetrics step();
    int iteration() const { return iteration_; }
    double extent() const { return extent_; }
    const TrainConfig& config() const { return cfg_; }

private:
    HyrfModel& model_;
    std::vector<const View*> views_;
    TrainConfig cfg_;
    Optimizer opt_;
    std::mt19937_64 rng_;
    std::vector<std::size_t> order_;
    std::size_t cursor_ = 0;
    int iteration_ = 0;
    double extent_ = 1.0;
};

struct EvalRow {
    std::string name;
    double psnr = 0.0;
    double ssim = 0.0;
};

/// Renders each view and scores it against its image.
std::vector<EvalRow> evaluate(const HyrfModel& model, const std::vector<const View*>& views,
                              const RenderOptions& opts);

struct FitOptions {
    std::string out_dir;
    int log_interval = 10;
    /// 0 keeps only the final checkpoint.
    int checkpoint_interval = 0;
    const std::atomic<bool>* stop = nullptr;
    std::function<void(const StepMetrics&, double wall_time)> on_log;
};

struct FitResult {
    int iterations = 0;
    bool interrupted = false;
    std::string checkpoint_path;
    std::string metrics_path;
    StepMetrics last;
};

/// Initializes nothing: `model` must already hold Gaussians. Writes
/// `metrics.csv` (iteration,loss,psnr,n_gaussians,wall_time, one row per
/// log interval) and `checkpoint.bin` into out_dir; intermediate
/// checkpoints go to `checkpoint_<iter>.bin`. On a stop request the
/// current state is flushed and the run returns early.
FitResult fit(HyrfModel& model, const Dataset& data, const TrainConfig& cfg,
              const FitOptions& opts);

}  // namespace hyrf
