#pragma once

// Integer factorization for moduli up to 2^32: trial division by the
// sieved primes below 2^16 is exact in this range (any cofactor left
// after removing them is prime). Factor lists are ordered by ascending
// prime and feed the residue-number-system machinery and the
// full-period tests.

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "prnglab/common.hpp"

namespace prnglab {

struct PrimePower {
    u64 prime;
    u32 exponent;
    u64 value;  // prime^exponent

    friend bool operator==(const PrimePower&, const PrimePower&) = default;
};

using Factorization = std::vector<PrimePower>;

namespace detail {
inline const std::vector<u32>& small_primes() {
    static const std::vector<u32> primes = [] {
        constexpr u32 bound = 1u << 16;
        std::vector<bool> composite(bound, false);
        std::vector<u32> out;
        for (u32 i = 2; i < bound; ++i) {
            if (composite[i]) continue;
            out.push_back(i);
            for (u64 j = static_cast<u64>(i) * i; j < bound; j += i) composite[j] = true;
        }
        return out;
    }();
    return primes;
}
}  // namespace detail

/// Prime-power factorization of m, ascending primes, exponents >= 1.
/// Valid for 2 <= m <= 2^32; throws std::invalid_argument below 2.
[[nodiscard]] inline Factorization factorize(u64 m) {
    if (m < 2) throw std::invalid_argument("factorize: argument must be >= 2");
    Factorization out;
    u64 rest = m;
    for (u32 p : detail::small_primes()) {
        if (static_cast<u64>(p) * p > rest) break;
        if (rest % p != 0) continue;
        PrimePower pp{p, 0, 1};
        while (rest % p == 0) {
            rest /= p;
            pp.exponent += 1;
            pp.value *= p;
        }
        out.push_back(pp);
    }
    if (rest > 1) out.push_back({rest, 1, rest});  // prime cofactor (rest < 2^32 has no factor > 2^16 twice)
    return out;
}

/// Product of the distinct primes.
[[nodiscard]] inline u64 radical(const Factorization& f) {
    u64 r = 1;
    for (const auto& pp : f) r *= pp.prime;
    return r;
}

/// Euler phi from a factorization.
[[nodiscard]] inline u64 totient(const Factorization& f) {
    u64 t = 1;
    for (const auto& pp : f) t *= (pp.value / pp.prime) * (pp.prime - 1);
    return t;
}

}  // namespace prnglab
