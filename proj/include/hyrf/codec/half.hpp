#pragma once

#include <cstdint>

namespace hyrf::codec {

/// IEEE 754 binary16 bits of `f`, rounded to nearest even. Overflow goes to
/// infinity, NaN stays NaN.
std::uint16_t float_to_half(float f);

/// Exact widening of binary16 bits.
float half_to_float(std::uint16_t h);

}  // namespace hyrf::codec
