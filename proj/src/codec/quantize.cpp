#include "hyrf/codec/quantize.hpp"

#include <algorithm>
#include <cmath>

#include "hyrf/error.hpp"
#include "hyrf/precision.hpp"

namespace hyrf::codec {

QuantizedArray quantize_8bit(std::span<const double> values) {
    QuantizedArray q;
    q.codes.assign(values.size(), 0);
    if (values.empty()) return q;
    for (double v : values) {
        if (!std::isfinite(v)) throw InvalidInput("quantize_8bit: non-finite value");
    }
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    // Widen to the enclosing floats so every value stays inside the stored range.
    q.min = to_f32_down(*lo);
    q.max = -to_f32_down(-*hi);
    const double range = q.max - q.min;
    if (!(range > 0.0)) return q;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double c = std::round((values[i] - q.min) / range * 255.0);
        q.codes[i] = static_cast<std::uint8_t>(std::clamp(c, 0.0, 255.0));
    }
    return q;
}

void dequantize_8bit(const QuantizedArray& q, std::span<double> out) {
    if (out.size() != q.codes.size()) throw InvalidInput("dequantize_8bit: length mismatch");
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = std::lerp(q.min, q.max, q.codes[i] / 255.0);
    }
}

}  // namespace hyrf::codec
