#pragma once

#include <cmath>

namespace hyrf {

// Trainable parameters are computed in double but always hold values that a
// 32-bit float represents exactly, so checkpoints round-trip bit for bit.
inline double to_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

/// Largest float-representable value not above `v`.
inline double to_f32_down(double v) {
    float f = static_cast<float>(v);
    if (static_cast<double>(f) > v) f = std::nextafter(f, -INFINITY);
    return f;
}

}  // namespace hyrf
