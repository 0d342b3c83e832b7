#pragma once

#include <cstdint>

#include "scanet/tensor.hpp"

namespace scanet {

// IEEE 754 binary16 <-> binary32 conversion, round-to-nearest-even.
// Software implementation; no hardware F16C dependency.
uint16_t f32_to_f16_bits(float value);
float f16_bits_to_f32(uint16_t bits);

// Float kept after a trip through binary16. Values whose magnitude rounds
// past the largest finite half (65504) come back as +-65504 instead of
// infinity. Idempotent.
float f16_round(float value);

Tensor cast_f16_roundtrip(const Tensor& t);
void cast_f16_roundtrip_inplace(Tensor& t);

}  // namespace scanet
