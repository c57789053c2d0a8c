#include "hyrf/optimizer.hpp"

#include <algorithm>
#include <cmath>

#include "hyrf/error.hpp"
#include "hyrf/precision.hpp"

namespace hyrf {

double LearningRates::position_at(int step, double extent) const {
    const double t = position_decay_steps > 0
                         ? std::clamp(double(step) / position_decay_steps, 0.0, 1.0)
                         : 1.0;
    // Log-linear needs both ends positive; fall back to linear otherwise.
    if (position <= 0.0 || position_final <= 0.0) return extent * ((1.0 - t) * position + t * position_final);
    return extent * std::exp((1.0 - t) * std::log(position) + t * std::log(position_final));
}

void LearningRates::validate() const {
    if (!(position >= 0.0 && position_final >= 0.0 && explicit_attributes >= 0.0 &&
          hash_tables >= 0.0 && decoders >= 0.0)) {
        throw InvalidInput("learning rates must be non-negative");
    }
}

Optimizer::Optimizer(const HyrfModel& model, AdamConfig cfg) : cfg_(cfg) {
    auto init = [](Moments& m, std::size_t n) {
        m.m1.assign(n, 0.0);
        m.m2.assign(n, 0.0);
    };
    init(radiance_, model.radiance.params().size());
    init(geometry_, model.geometry.params().size());
    init(geometry_decoder_, model.geometry_decoder.params().size());
    init(color_decoder_, model.color_decoder.params().size());
}

void Optimizer::update(std::span<double> value, std::span<const double> grad, Moments& mo,
                       double lr) {
    for (std::size_t i = 0; i < value.size(); ++i) {
        const double g = grad[i];
        mo.m1[i] = cfg_.beta1 * mo.m1[i] + (1.0 - cfg_.beta1) * g;
        mo.m2[i] = cfg_.beta2 * mo.m2[i] + (1.0 - cfg_.beta2) * g * g;
        const double step = lr * (mo.m1[i] / c1_) / (std::sqrt(mo.m2[i] / c2_) + cfg_.eps);
        value[i] = to_f32(value[i] - step);
    }
}

void Optimizer::update_array(ParamArray& a, double lr) {
    for (std::size_t i = 0; i < a.value.size(); ++i) {
        const double g = a.grad[i];
        a.moment1[i] = cfg_.beta1 * a.moment1[i] + (1.0 - cfg_.beta1) * g;
        a.moment2[i] = cfg_.beta2 * a.moment2[i] + (1.0 - cfg_.beta2) * g * g;
        const double step = lr * (a.moment1[i] / c1_) / (std::sqrt(a.moment2[i] / c2_) + cfg_.eps);
        a.value[i] = to_f32(a.value[i] - step);
    }
}

void Optimizer::update_hash(HashField& field, Moments& mo, double lr) {
    if (mo.m1.size() != field.params().size()) {
        throw ContractViolation("optimizer state does not match the hash field");
    }
    const int nf = field.config().features_per_entry;
    auto p = field.params();
    auto g = field.grads();
    for (std::uint32_t e : field.touched_entries()) {
        for (int f = 0; f < nf; ++f) {
            const std::size_t i = std::size_t(e) * nf + f;
            mo.m1[i] = cfg_.beta1 * mo.m1[i] + (1.0 - cfg_.beta1) * g[i];
            mo.m2[i] = cfg_.beta2 * mo.m2[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
            const double step = lr * (mo.m1[i] / c1_) / (std::sqrt(mo.m2[i] / c2_) + cfg_.eps);
            p[i] = to_f32(p[i] - step);
        }
    }
}

void Optimizer::step(HyrfModel& model, const LearningRates& lr, double extent) {
    ++t_;
    c1_ = 1.0 - std::pow(cfg_.beta1, double(t_));
    c2_ = 1.0 - std::pow(cfg_.beta2, double(t_));
    auto& gs = model.gaussians;
    update_array(gs.positions, lr.position_at(int(t_ - 1), extent));
    update_array(gs.colors, lr.explicit_attributes);
    update_array(gs.scales, lr.explicit_attributes);
    update_array(gs.opacities, lr.explicit_attributes);
    update_hash(model.radiance, radiance_, lr.hash_tables);
    update_hash(model.geometry, geometry_, lr.hash_tables);
    update(model.geometry_decoder.params(), model.geometry_decoder.grads(), geometry_decoder_,
           lr.decoders);
    update(model.color_decoder.params(), model.color_decoder.grads(), color_decoder_, lr.decoders);
}

}  // namespace hyrf
