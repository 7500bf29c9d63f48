#pragma once

// Residue number system view of values mod m = prod p_j^{w_j}: each
// value is carried by its residues mod the prime-power factors, and
// each residue is expanded into base-p_j digits, least significant
// first. The point of the decomposition: for a full-period generator
// the k-th lowest base-p digit of the value stream is periodic with
// period exactly p^k, and striding the stream by r divides that period
// down to p^k / gcd(r, p^k). Those two facts drive the emulators and
// all staircase analysis, so alongside the converters this header has
// the theoretical periods and an exact empirical period measurement to
// hold them against.

#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

#include "prnglab/common.hpp"
#include "prnglab/factor.hpp"
#include "prnglab/modmath.hpp"

namespace prnglab {

/// Digits of one value under a factorization: digits_per_factor[j][i]
/// is the i-th lowest base-p_j digit (0-indexed) of x mod p_j^{w_j},
/// with exactly w_j entries per factor.
struct RnsDigits {
    Factorization factors;
    std::vector<std::vector<u32>> digits_per_factor;
};

[[nodiscard]] inline RnsDigits to_digits(u64 x, const Factorization& f) {
    if (f.empty()) throw std::invalid_argument("to_digits: empty factorization");
    RnsDigits out{f, {}};
    out.digits_per_factor.reserve(f.size());
    for (const auto& pp : f) {
        u64 residue = x % pp.value;
        std::vector<u32> digits(pp.exponent);
        for (u32 i = 0; i < pp.exponent; ++i) {
            digits[i] = static_cast<u32>(residue % pp.prime);
            residue /= pp.prime;
        }
        out.digits_per_factor.push_back(std::move(digits));
    }
    return out;
}

/// CRT reconstruction: the unique x in [0, prod p_j^{w_j}) with the
/// given digits. Throws on digit counts or values out of range.
[[nodiscard]] inline u64 from_digits(const RnsDigits& d) {
    if (d.factors.empty()) throw std::invalid_argument("from_digits: empty factorization");
    if (d.digits_per_factor.size() != d.factors.size())
        throw std::invalid_argument("from_digits: factor/digit shape mismatch");
    u64 x = 0, modulus = 1;
    for (std::size_t j = 0; j < d.factors.size(); ++j) {
        const auto& pp = d.factors[j];
        const auto& digits = d.digits_per_factor[j];
        if (digits.size() != pp.exponent)
            throw std::invalid_argument("from_digits: wrong digit count for prime " +
                                        std::to_string(pp.prime));
        u64 residue = 0, place = 1;
        for (u32 i = 0; i < pp.exponent; ++i) {
            if (digits[i] >= pp.prime)
                throw std::domain_error("from_digits: digit exceeds base for prime " +
                                        std::to_string(pp.prime));
            residue += digits[i] * place;
            place *= pp.prime;
        }
        if (j == 0) {
            x = residue;
            modulus = pp.value;
            continue;
        }
        // Merge x (mod modulus) with residue (mod pp.value); the moduli
        // are coprime by construction.
        auto [g, s, t] = ext_gcd(modulus, pp.value);
        (void)g; (void)t;
        i128 sm = s % static_cast<i128>(pp.value);
        if (sm < 0) sm += pp.value;
        const u64 inv = static_cast<u64>(sm);  // modulus^{-1} mod pp.value
        const u64 diff = mod_sub(residue, x % pp.value, pp.value);
        x += modulus * mod_mul(diff, inv, pp.value);
        modulus *= pp.value;
    }
    return x;
}

// ------------------------------------------------------------------
// Digit periods
// ------------------------------------------------------------------

/// Period of the k-th lowest base-p digit stream of a full-period
/// generator whose modulus p^k divides: exactly p^k. (k >= 1.)
[[nodiscard]] constexpr u64 digit_period_theory(u64 p, u32 k) {
    u64 r = 1;
    for (u32 i = 0; i < k; ++i) r *= p;
    return r;
}

/// Same digit observed on the r-strided subsequence: period divides
/// down to p^k / gcd(r, p^k).
[[nodiscard]] constexpr u64 reduced_digit_period(u64 p, u32 k, u64 r) {
    const u64 full = digit_period_theory(p, k);
    return full / std::gcd(r, full);
}

/// Smallest d >= 1 with stream[t+d] == stream[t] for every valid t,
/// requiring d <= len/2 so at least two full periods support the
/// answer; nullopt when no such d exists. Throws insufficient_data_error
/// for streams shorter than 2.
///
/// Implementation: the classic prefix-function (failure link) trick —
/// the smallest period of a string equals len minus the longest proper
/// border, computed in O(len). Equivalent to scanning d upward and
/// checking the shift-match over the whole stream, just not quadratic.
template <typename T>
[[nodiscard]] std::optional<u64> minimal_period(const std::vector<T>& stream) {
    const std::size_t n = stream.size();
    if (n < 2) throw insufficient_data_error("minimal_period: need at least 2 elements");
    std::vector<std::size_t> border(n, 0);
    for (std::size_t i = 1; i < n; ++i) {
        std::size_t b = border[i - 1];
        while (b > 0 && stream[i] != stream[b]) b = border[b - 1];
        if (stream[i] == stream[b]) ++b;
        border[i] = b;
    }
    const u64 d = static_cast<u64>(n - border[n - 1]);
    if (d > n / 2) return std::nullopt;
    return d;
}

/// Measured period of the k-th lowest base-p digit of `values`
/// (k 1-indexed, digit = floor(x mod p^k / p^{k-1})).
[[nodiscard]] inline std::optional<u64> measure_digit_period(const std::vector<u64>& values,
                                                             u64 p, u32 k) {
    if (p < 2 || k == 0) throw std::invalid_argument("measure_digit_period: need p >= 2, k >= 1");
    const u64 pk = digit_period_theory(p, k);
    const u64 pk1 = pk / p;
    std::vector<u32> stream;
    stream.reserve(values.size());
    for (u64 x : values) stream.push_back(static_cast<u32>((x % pk) / pk1));
    return minimal_period(stream);
}

}  // namespace prnglab
