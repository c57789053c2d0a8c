#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace hyrf::codec {

/// 8-bit min-max quantized array. min and max are 32-bit representable.
struct QuantizedArray {
    std::vector<std::uint8_t> codes;
    double min = 0.0;
    double max = 0.0;
};

/// code = round((v - min) / (max - min) * 255), halves away from zero. A flat
/// array gets all-zero codes. Throws InvalidInput on non-finite values.
QuantizedArray quantize_8bit(std::span<const double> values);

/// Writes min + (max - min) * code / 255 into `out` (same length as codes).
void dequantize_8bit(const QuantizedArray& q, std::span<double> out);

}  // namespace hyrf::codec
