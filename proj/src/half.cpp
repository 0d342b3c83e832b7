#include "scanet/half.hpp"

#include <cstring>

namespace scanet {

namespace {

uint32_t f32_bits(float f) {
    uint32_t u;
    std::memcpy(&u, &f, sizeof(u));
    return u;
}

float bits_f32(uint32_t u) {
    float f;
    std::memcpy(&f, &u, sizeof(f));
    return f;
}

constexpr float kHalfMax = 65504.0f;

}  // namespace

uint16_t f32_to_f16_bits(float value) {
    const uint32_t x = f32_bits(value);
    const uint16_t sign = static_cast<uint16_t>((x >> 16) & 0x8000u);
    const uint32_t abs = x & 0x7FFFFFFFu;

    if (abs >= 0x7F800000u) {  // inf or nan
        if (abs > 0x7F800000u) return static_cast<uint16_t>(sign | 0x7E00u);  // quiet nan
        return static_cast<uint16_t>(sign | 0x7C00u);
    }
    // Values >= 65520 round (to nearest even) past the largest finite half.
    if (abs >= 0x477FF000u) return static_cast<uint16_t>(sign | 0x7C00u);

    if (abs < 0x38800000u) {  // subnormal half or zero (|x| < 2^-14)
        if (abs < 0x33000000u) return sign;  // < 2^-25: rounds to zero (2^-25 ties to even = 0)
        const int exp = static_cast<int>(abs >> 23);  // 102..112 here
        const uint32_t mant = (abs & 0x007FFFFFu) | 0x00800000u;
        // Half subnormal unit is 2^-24: significand = mant * 2^(exp-126).
        const int drop = 126 - exp;
        uint32_t half = mant >> drop;
        const uint32_t rem = mant & ((1u << drop) - 1u);
        const uint32_t halfway = 1u << (drop - 1);
        if (rem > halfway || (rem == halfway && (half & 1u))) ++half;  // may carry to normal
        return static_cast<uint16_t>(sign | half);
    }

    // Normal range: rebias exponent, round mantissa to 10 bits.
    uint32_t half = ((abs >> 13) & 0x3FFu) | (((abs >> 23) - 112u) << 10);
    const uint32_t rem = abs & 0x1FFFu;
    if (rem > 0x1000u || (rem == 0x1000u && (half & 1u))) ++half;  // may carry into exponent
    return static_cast<uint16_t>(sign | half);
}

float f16_bits_to_f32(uint16_t bits) {
    const uint32_t sign = static_cast<uint32_t>(bits & 0x8000u) << 16;
    uint32_t exp = (bits >> 10) & 0x1Fu;
    uint32_t mant = bits & 0x3FFu;

    if (exp == 0x1Fu) {  // inf / nan
        return bits_f32(sign | 0x7F800000u | (mant << 13));
    }
    if (exp == 0) {
        if (mant == 0) return bits_f32(sign);
        // Normalize the subnormal.
        while (!(mant & 0x400u)) {
            mant <<= 1;
            --exp;
        }
        mant &= 0x3FFu;
        ++exp;
    }
    return bits_f32(sign | ((exp + 112u) << 23) | (mant << 13));
}

float f16_round(float value) {
    const uint16_t h = f32_to_f16_bits(value);
    if ((h & 0x7C00u) == 0x7C00u && (h & 0x03FFu) == 0) {
        return (h & 0x8000u) ? -kHalfMax : kHalfMax;  // overflow clamps to +-65504
    }
    return f16_bits_to_f32(h);
}

Tensor cast_f16_roundtrip(const Tensor& t) {
    Tensor out = t.clone();
    cast_f16_roundtrip_inplace(out);
    return out;
}

void cast_f16_roundtrip_inplace(Tensor& t) {
    for (float& v : t.values()) v = f16_round(v);
}

}  // namespace scanet
