#pragma once

// Modular arithmetic on 64-bit operands with 128-bit intermediates.
// Moduli in this library reach 2^32, so raw products reach 2^64 and
// every multiply routes through unsigned __int128 before reduction.

#include <cstdint>
#include <stdexcept>
#include <tuple>

#include "prnglab/common.hpp"

namespace prnglab {

[[nodiscard]] constexpr u64 mod_add(u64 x, u64 y, u64 m) {
    return static_cast<u64>((static_cast<u128>(x) + y) % m);
}

[[nodiscard]] constexpr u64 mod_sub(u64 x, u64 y, u64 m) {
    u64 xr = x % m, yr = y % m;
    return xr >= yr ? xr - yr : xr + (m - yr);
}

[[nodiscard]] constexpr u64 mod_mul(u64 x, u64 y, u64 m) {
    return static_cast<u64>(static_cast<u128>(x) * y % m);
}

[[nodiscard]] constexpr u64 mod_pow(u64 b, u64 e, u64 m) {
    u64 r = 1 % m;
    b %= m;
    while (e) {
        if (e & 1) r = mod_mul(r, b, m);
        b = mod_mul(b, b, m);
        e >>= 1;
    }
    return r;
}

// 1 + b + b^2 + ... + b^(n-1) mod m, without dividing by b-1 (which need
// not be invertible). Doubling recurrences: S(2k) = S(k) * (1 + b^k),
// S(k+1) = S(k) * b + 1. O(log n).
[[nodiscard]] constexpr u64 mod_geometric_sum(u64 b, u64 n, u64 m) {
    u64 sum = 0;     // S(h) for the processed high bits h of n
    u64 pw = 1 % m;  // b^h
    b %= m;
    for (int i = 63; i >= 0; --i) {
        sum = mod_mul(sum, mod_add(1, pw, m), m);
        pw = mod_mul(pw, pw, m);
        if ((n >> i) & 1) {
            sum = mod_add(mod_mul(sum, b, m), 1, m);
            pw = mod_mul(pw, b, m);
        }
    }
    return sum;
}

// Extended gcd: returns (g, s, t) with s*a + t*b = g = gcd(a, b).
[[nodiscard]] constexpr std::tuple<u64, i128, i128> ext_gcd(u64 a, u64 b) {
    i128 s0 = 1, t0 = 0, s1 = 0, t1 = 1;
    u64 r0 = a, r1 = b;
    while (r1 != 0) {
        u64 q = r0 / r1;
        u64 r2 = r0 - q * r1;
        r0 = r1; r1 = r2;
        i128 s2 = s0 - static_cast<i128>(q) * s1;
        i128 t2 = t0 - static_cast<i128>(q) * t1;
        s0 = s1; s1 = s2;
        t0 = t1; t1 = t2;
    }
    return {r0, s0, t0};
}

// Inverse of a mod m; throws if gcd(a, m) != 1.
[[nodiscard]] inline u64 mod_inverse(u64 a, u64 m) {
    auto [g, s, t] = ext_gcd(a % m, m);
    (void)t;
    if (g != 1) throw std::domain_error("mod_inverse: operand not coprime to modulus");
    i128 r = s % static_cast<i128>(m);
    if (r < 0) r += m;
    return static_cast<u64>(r);
}

// p-adic valuation of x, capped at `cap` (and v_p(0) reports the cap,
// standing in for infinity).
[[nodiscard]] constexpr u32 valuation(u64 x, u64 p, u32 cap) {
    u32 v = 0;
    while (v < cap && x != 0 && x % p == 0) {
        x /= p;
        ++v;
    }
    return (x == 0 && v < cap) ? cap : v;
}

}  // namespace prnglab
