#pragma once

#include <array>
#include <cstdint>

namespace robust::codec::gf256 {

// GF(2^8) with the primitive polynomial x^8 + x^4 + x^3 + x^2 + 1 (0x11d), generator 2.
struct Tables {
    std::array<std::uint8_t, 512> exp{};
    std::array<std::uint8_t, 256> log{};

    constexpr Tables() {
        unsigned x = 1;
        for (unsigned i = 0; i < 255; ++i) {
            exp[i] = static_cast<std::uint8_t>(x);
            log[x] = static_cast<std::uint8_t>(i);
            x <<= 1;
            if (x & 0x100) x ^= 0x11d;
        }
        for (unsigned i = 255; i < 512; ++i) exp[i] = exp[i - 255];
    }
};

inline constexpr Tables kTables{};

constexpr std::uint8_t add(std::uint8_t a, std::uint8_t b) { return a ^ b; }

constexpr std::uint8_t mul(std::uint8_t a, std::uint8_t b) {
    if (a == 0 || b == 0) return 0;
    return kTables.exp[kTables.log[a] + kTables.log[b]];
}

// b must be non-zero
constexpr std::uint8_t div(std::uint8_t a, std::uint8_t b) {
    if (a == 0) return 0;
    return kTables.exp[kTables.log[a] + 255 - kTables.log[b]];
}

constexpr std::uint8_t inv(std::uint8_t a) { return kTables.exp[255 - kTables.log[a]]; }

// dst[i] ^= coef * src[i]
inline void mul_add_row(std::uint8_t* dst, const std::uint8_t* src, std::uint8_t coef, std::size_t len) {
    if (coef == 0) return;
    if (coef == 1) {
        for (std::size_t i = 0; i < len; ++i) dst[i] ^= src[i];
        return;
    }
    const unsigned lc = kTables.log[coef];
    for (std::size_t i = 0; i < len; ++i) {
        const std::uint8_t s = src[i];
        if (s != 0) dst[i] ^= kTables.exp[kTables.log[s] + lc];
    }
}

}  // namespace robust::codec::gf256
