#include "hyrf/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "hyrf/error.hpp"

namespace hyrf {

DecoderNet::DecoderNet(std::vector<int> dims, std::uint64_t seed) : dims_(std::move(dims)) {
    if (dims_.size() < 2) throw InvalidInput("decoder needs at least input and output dims");
    for (int d : dims_) {
        if (d <= 0) throw InvalidInput("decoder layer dims must be positive");
    }
    std::size_t total = 0;
    for (int l = 0; l < n_layers(); ++l) {
        offsets_.push_back(total);
        total += std::size_t(dims_[l]) * dims_[l + 1] + dims_[l + 1];
    }
    offsets_.push_back(total);
    params_.assign(total, 0.0);
    grads_.assign(total, 0.0);

    std::mt19937_64 rng(seed);
    for (int l = 0; l < n_layers(); ++l) {
        const double bound = std::sqrt(1.0 / dims_[l]);
        std::uniform_real_distribution<double> dist(-bound, bound);
        const std::size_t n = std::size_t(dims_[l]) * dims_[l + 1];
        for (std::size_t i = 0; i < n; ++i) {
            params_[offsets_[l] + i] = static_cast<float>(dist(rng));
        }
    }
}

void DecoderNet::zero_grad() { std::fill(grads_.begin(), grads_.end(), 0.0); }

void DecoderNet::forward(std::span<const double> in, std::span<double> out,
                         DecoderCache* cache) const {
    if (in.size() != static_cast<std::size_t>(input_dim())) {
        std::ostringstream os;
        os << "decoder expects " << input_dim() << " inputs, got " << in.size();
        throw InvalidInput(os.str());
    }
    if (out.size() != static_cast<std::size_t>(output_dim())) {
        throw InvalidInput("decoder output buffer has wrong length");
    }
    std::size_t hidden_total = 0;
    for (int l = 1; l + 1 < static_cast<int>(dims_.size()); ++l) hidden_total += dims_[l];

    std::vector<double> local_pre;
    std::vector<double>& pre = cache ? cache->hidden_pre : local_pre;
    pre.resize(hidden_total);
    if (cache) cache->input.assign(in.begin(), in.end());

    std::vector<double> act(in.begin(), in.end());
    std::vector<double> next;
    std::size_t pre_offset = 0;
    for (int l = 0; l < n_layers(); ++l) {
        const int n_in = dims_[l], n_out = dims_[l + 1];
        const double* w = params_.data() + weight_offset(l);
        const double* b = params_.data() + bias_offset(l);
        next.assign(n_out, 0.0);
        for (int o = 0; o < n_out; ++o) {
            const double* row = w + std::size_t(o) * n_in;
            double s = b[o];
            for (int i = 0; i < n_in; ++i) s += row[i] * act[i];
            next[o] = s;
        }
        if (l + 1 < n_layers()) {
            std::copy(next.begin(), next.end(), pre.begin() + pre_offset);
            pre_offset += n_out;
            for (double& v : next) v = v > 0.0 ? v : 0.0;
        }
        act.swap(next);
    }
    std::copy(act.begin(), act.end(), out.begin());
    if (cache) cache->valid = true;
}

void DecoderNet::backward(const DecoderCache& cache, std::span<const double> upstream,
                          std::span<double> param_grads, std::span<double> input_grad) const {
    if (!cache.valid || cache.input.size() != static_cast<std::size_t>(input_dim())) {
        throw ContractViolation("decoder backward called without a matching forward cache");
    }
    if (upstream.size() != static_cast<std::size_t>(output_dim())) {
        throw InvalidInput("decoder backward: upstream gradient has wrong length");
    }
    if (param_grads.size() != params_.size()) {
        throw InvalidInput("decoder backward: parameter gradient buffer has wrong length");
    }
    if (!input_grad.empty() && input_grad.size() != static_cast<std::size_t>(input_dim())) {
        throw InvalidInput("decoder backward: input gradient buffer has wrong length");
    }

    // Offsets of each hidden layer's pre-activations inside cache.hidden_pre.
    std::vector<std::size_t> pre_offsets(n_layers(), 0);
    for (int l = 1; l < n_layers(); ++l) pre_offsets[l] = pre_offsets[l - 1] + dims_[l];

    std::vector<double> grad_out(upstream.begin(), upstream.end());
    std::vector<double> grad_in;
    std::vector<double> layer_in;
    for (int l = n_layers() - 1; l >= 0; --l) {
        const int n_in = dims_[l], n_out = dims_[l + 1];
        // Input activations of layer l.
        layer_in.resize(n_in);
        if (l == 0) {
            std::copy(cache.input.begin(), cache.input.end(), layer_in.begin());
        } else {
            const double* pre = cache.hidden_pre.data() + pre_offsets[l - 1];
            for (int i = 0; i < n_in; ++i) layer_in[i] = pre[i] > 0.0 ? pre[i] : 0.0;
        }
        const double* w = params_.data() + weight_offset(l);
        double* gw = param_grads.data() + weight_offset(l);
        double* gb = param_grads.data() + bias_offset(l);
        grad_in.assign(n_in, 0.0);
        for (int o = 0; o < n_out; ++o) {
            const double g = grad_out[o];
            if (g == 0.0) continue;
            gb[o] += g;
            const double* row = w + std::size_t(o) * n_in;
            double* grow = gw + std::size_t(o) * n_in;
            for (int i = 0; i < n_in; ++i) {
                grow[i] += g * layer_in[i];
                grad_in[i] += g * row[i];
            }
        }
        if (l > 0) {
            const double* pre = cache.hidden_pre.data() + pre_offsets[l - 1];
            for (int i = 0; i < n_in; ++i) {
                if (!(pre[i] > 0.0)) grad_in[i] = 0.0;
            }
        }
        grad_out.swap(grad_in);
    }
    if (!input_grad.empty()) std::copy(grad_out.begin(), grad_out.end(), input_grad.begin());
}

void DecoderNet::backward(const DecoderCache& cache, std::span<const double> upstream,
                          std::span<double> input_grad) {
    const DecoderNet& self = *this;
    self.backward(cache, upstream, grads_, input_grad);
}

RawGeometry decode_geometry(std::span<const double> geo_features, const DecoderNet& net,
                            DecoderCache* cache) {
    if (net.output_dim() != kGeometryOutputs) {
        throw InvalidInput("geometry decoder must have 8 outputs");
    }
    double out[kGeometryOutputs];
    net.forward(geo_features, out, cache);
    RawGeometry g;
    g.opacity = out[0];
    for (int k = 0; k < 3; ++k) g.scale[k] = out[1 + k];
    for (int k = 0; k < 4; ++k) g.rotation[k] = out[4 + k];
    return g;
}

RawColor decode_color(std::span<const double> rad_features, std::span<const double> dir_encoding,
                      const DecoderNet& net, DecoderCache* cache) {
    if (net.output_dim() != kColorOutputs) throw InvalidInput("color decoder must have 3 outputs");
    if (rad_features.size() + dir_encoding.size() != static_cast<std::size_t>(net.input_dim())) {
        std::ostringstream os;
        os << "color decoder expects " << net.input_dim() << " inputs, got "
           << rad_features.size() << " + " << dir_encoding.size();
        throw InvalidInput(os.str());
    }
    std::vector<double> in(rad_features.begin(), rad_features.end());
    in.insert(in.end(), dir_encoding.begin(), dir_encoding.end());
    RawColor c;
    net.forward(in, c.color, cache);
    return c;
}

}  // namespace hyrf
