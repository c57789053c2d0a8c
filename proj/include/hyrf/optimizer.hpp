#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hyrf/model.hpp"

namespace hyrf {

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-15;
};

/// Learning rates of the four parameter groups. Positions decay
/// exponentially from `position` to `position_final` over
/// `position_decay_steps`, both multiplied by the scene extent.
struct LearningRates {
    double position = 1.6e-4;
    double position_final = 1.6e-6;
    int position_decay_steps = 30000;
    double explicit_attributes = 2.5e-3;
    double hash_tables = 1e-2;
    double decoders = 1e-3;

    double position_at(int step, double extent) const;
    void validate() const;
};

/// Adam with bias correction over every trainable array of a HyrfModel.
/// Per-Gaussian moments live in the Gaussian store so they follow densify
/// and prune; hash tables update only the entries touched since the last
/// zero_grad (lazy moments).
class Optimizer {
public:
    Optimizer() = default;
    Optimizer(const HyrfModel& model, AdamConfig cfg);

    /// One update with the current gradients. `extent` scales the position rate.
    void step(HyrfModel& model, const LearningRates& lr, double extent);
    std::int64_t steps() const { return t_; }

private:
    struct Moments {
        std::vector<double> m1, m2;
    };
    void update(std::span<double> value, std::span<const double> grad, Moments& mo, double lr);
    void update_hash(HashField& field, Moments& mo, double lr);
    void update_array(ParamArray& a, double lr);

    AdamConfig cfg_;
    std::int64_t t_ = 0;
    double c1_ = 1.0, c2_ = 1.0;
    Moments radiance_, geometry_, geometry_decoder_, color_decoder_;
};

}  // namespace hyrf
