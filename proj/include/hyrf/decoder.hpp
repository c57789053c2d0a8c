#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace hyrf {

/// Per-evaluation activations kept for the backward pass.
struct DecoderCache {
    std::vector<double> input;
    /// Pre-activation values of each hidden layer, concatenated.
    std::vector<double> hidden_pre;
    bool valid = false;
};

/// Small fully connected network: rectified hidden layers, linear output.
/// Parameters are one flat array; for each layer the row-major weights
/// (out x in) are followed by the biases.
class DecoderNet {
public:
    DecoderNet() = default;
    /// `dims` = {input, hidden..., output}. Weights are uniform in
    /// [-sqrt(1/fan_in), sqrt(1/fan_in)], biases zero.
    DecoderNet(std::vector<int> dims, std::uint64_t seed);

    const std::vector<int>& dims() const { return dims_; }
    int input_dim() const { return dims_.front(); }
    int output_dim() const { return dims_.back(); }
    int n_layers() const { return static_cast<int>(dims_.size()) - 1; }

    std::size_t weight_offset(int layer) const { return offsets_[layer]; }
    std::size_t bias_offset(int layer) const {
        return offsets_[layer] + std::size_t(dims_[layer]) * dims_[layer + 1];
    }

    std::span<double> params() { return params_; }
    std::span<const double> params() const { return params_; }
    std::span<double> grads() { return grads_; }
    std::span<const double> grads() const { return grads_; }
    void zero_grad();

    /// Writes output_dim() values into `out`. When `cache` is non-null it is
    /// filled for a later backward call.
    void forward(std::span<const double> in, std::span<double> out, DecoderCache* cache = nullptr) const;

    /// Accumulates parameter gradients into `param_grads` (same length as
    /// params) and writes dL/d(input) into `input_grad` if it is non-empty.
    void backward(const DecoderCache& cache, std::span<const double> upstream,
                  std::span<double> param_grads, std::span<double> input_grad) const;

    /// Convenience overload that accumulates into the network's own grads.
    void backward(const DecoderCache& cache, std::span<const double> upstream,
                  std::span<double> input_grad);

private:
    std::vector<int> dims_;
    std::vector<std::size_t> offsets_;
    std::vector<double> params_;
    std::vector<double> grads_;
};

/// Geometry decoder output layout: opacity (1), scale (3), rotation (4).
inline constexpr int kGeometryOutputs = 8;
inline constexpr int kColorOutputs = 3;

struct RawGeometry {
    double opacity = 0.0;
    double scale[3] = {0.0, 0.0, 0.0};
    double rotation[4] = {0.0, 0.0, 0.0, 0.0};
};

struct RawColor {
    double color[3] = {0.0, 0.0, 0.0};
};

RawGeometry decode_geometry(std::span<const double> geo_features, const DecoderNet& net,
                            DecoderCache* cache = nullptr);

/// Concatenates the radiance features and the direction encoding before decoding.
RawColor decode_color(std::span<const double> rad_features, std::span<const double> dir_encoding,
                      const DecoderNet& net, DecoderCache* cache = nullptr);

}  // namespace hyrf
