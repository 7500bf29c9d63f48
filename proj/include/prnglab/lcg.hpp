#pragma once

// Linear congruential generators over u64 state, modulus up to 2^32.
//
//      x_{t+1} = (a * x_t + c) mod m
//
// Everything downstream (digit analysis, emulators, crackers, corpus
// generation) sits on the handful of primitives in this header:
//
//  * stepping and batch sequence generation,
//  * r-step folding: the r-th iterate is itself an LCG with multiplier
//    a^r and increment c * (1 + a + ... + a^(r-1)), both mod m — folding
//    lets callers jump along a sequence or reason about strided
//    subsequences without materializing the skipped elements,
//  * exact cycle-length computation for an orbit (tails excluded),
//  * the Hull-Dobell full-period test, and
//  * uniform sampling of full-period (a, c) pairs for test protocols.
//
// Arithmetic notes: operands stay below 2^32 but products reach 2^64,
// so all reductions go through the 128-bit helpers in modmath.hpp. The
// increment sum in folding is computed by doubling recurrences rather
// than as a geometric closed form because a-1 is usually not invertible
// mod m for the parameter families of interest.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "prnglab/common.hpp"
#include "prnglab/factor.hpp"
#include "prnglab/modmath.hpp"
#include "prnglab/rng.hpp"

namespace prnglab {

/// \brief Parameters (m, a, c) of one generator. Construction validates
///        m >= 2, 0 < a < m, 0 <= c < m.
struct LcgParams {
    u64 m;
    u64 a;
    u64 c;

    LcgParams(u64 modulus, u64 multiplier, u64 increment)
        : m(modulus), a(multiplier), c(increment) {
        if (m < 2) throw std::invalid_argument("LcgParams: modulus must be >= 2");
        if (a == 0 || a >= m) throw std::invalid_argument("LcgParams: multiplier must satisfy 0 < a < m");
        if (c >= m) throw std::invalid_argument("LcgParams: increment must satisfy 0 <= c < m");
    }
};

/// \brief A position on an orbit: current value plus step counter.
struct LcgState {
    u64 x;
    u64 t;
};

/// \brief Parameters of the r-step map together with the stride that
///        produced them.
struct FoldedParams {
    u64 a_r;
    u64 c_r;
    u64 r;
};

/// \brief One step: (a * x + c) mod m.
[[nodiscard]] inline u64 lcg_step(u64 x, const LcgParams& p) {
    return mod_add(mod_mul(p.a, x % p.m, p.m), p.c, p.m);
}

/// \brief Advance a state by one step, incrementing its counter.
[[nodiscard]] inline LcgState lcg_next(LcgState s, const LcgParams& p) {
    return {lcg_step(s.x, p), s.t + 1};
}

/// \brief First `length` orbit values x_0, x_1, ..., starting at x0.
/// \throws std::invalid_argument for length == 0 or x0 >= m.
[[nodiscard]] inline std::vector<u64> lcg_sequence(u64 x0, const LcgParams& p, std::size_t length) {
    if (length == 0) throw std::invalid_argument("lcg_sequence: length must be positive");
    if (x0 >= p.m) throw std::invalid_argument("lcg_sequence: seed must satisfy 0 <= x0 < m");
    std::vector<u64> seq(length);
    u64 x = x0;
    for (std::size_t i = 0; i < length; ++i) {
        seq[i] = x;
        x = lcg_step(x, p);
    }
    return seq;
}

/// \brief Parameters of the r-step map: a_r = a^r, c_r = c * sum_{i<r} a^i.
///
/// fold_params(p, 1) is the identity fold; fold_params(p, 0) is the
/// identity map (a_r = 1, c_r = 0). Folding composes: folding by r1+r2
/// equals applying the r1- and r2-folds in sequence.
[[nodiscard]] inline FoldedParams fold_params(const LcgParams& p, u64 r) {
    return {mod_pow(p.a, r, p.m), mod_mul(p.c, mod_geometric_sum(p.a, r, p.m), p.m), r};
}

/// \brief Apply a folded map once: (a_r * x + c_r) mod m.
[[nodiscard]] inline u64 fold_step(u64 x, const FoldedParams& f, u64 m) {
    return mod_add(mod_mul(f.a_r, x % m, m), f.c_r, m);
}

// ------------------------------------------------------------------
// Cycle length
// ------------------------------------------------------------------

/// \brief Length of the cycle entered from x0 (pre-periodic tail
///        excluded): the smallest T >= 1 with x_{t+T} = x_t once the
///        orbit has settled.
///
/// For m up to 2^24 a stamped visit array finds the first revisit
/// directly; larger moduli use Brent's cycle finding so memory stays
/// O(1). Runtime is O(tail + cycle) either way; full-period orbits at
/// m = 2^32 take a few billion steps, so callers that only need a
/// bounded answer should not ask for the exact length.
[[nodiscard]] inline u64 period(const LcgParams& p, u64 x0) {
    if (x0 >= p.m) throw std::invalid_argument("period: seed must satisfy 0 <= x0 < m");
    if (p.m <= (u64{1} << 24)) {
        // Stamp each visited state with its step index; the first
        // revisit closes the cycle.
        std::vector<u64> seen_at(p.m, ~u64{0});
        u64 x = x0, t = 0;
        while (seen_at[x] == ~u64{0}) {
            seen_at[x] = t;
            x = lcg_step(x, p);
            ++t;
        }
        return t - seen_at[x];
    }
    // Brent: teleport the anchor along the orbit at power-of-two
    // intervals; the gap at which the runner meets the anchor is the
    // cycle length.
    u64 power = 1, lam = 1;
    u64 anchor = x0;
    u64 runner = lcg_step(x0, p);
    while (runner != anchor) {
        if (power == lam) {
            anchor = runner;
            power <<= 1;
            lam = 0;
        }
        runner = lcg_step(runner, p);
        ++lam;
    }
    return lam;
}

// ------------------------------------------------------------------
// Full-period parameters
// ------------------------------------------------------------------

/// \brief Hull-Dobell test: the orbit from every seed has period
///        exactly m iff (i) gcd(m, c) = 1, (ii) every prime dividing m
///        divides a - 1, and (iii) 4 | m implies 4 | a - 1.
[[nodiscard]] inline bool hull_dobell(u64 m, u64 a, u64 c) {
    if (m < 2 || a == 0 || a >= m || c >= m) return false;
    if (std::gcd(m, c) != 1) return false;
    for (const auto& pp : factorize(m))
        if ((a - 1) % pp.prime != 0) return false;
    if (m % 4 == 0 && (a - 1) % 4 != 0) return false;
    return true;
}

/// \brief Step size of the arithmetic progression {1, 1+K, 1+2K, ...}
///        that enumerates Hull-Dobell multipliers for m: K = rad(m),
///        doubled once more if 4 | m but rad misses the extra factor 2.
///
/// `radical` is the product of the distinct primes of m, supplied by
/// the caller (computed from a factorization).
[[nodiscard]] constexpr u64 hull_dobell_stride(u64 m, u64 radical) {
    u64 k = radical;
    if (m % 4 == 0 && k % 4 != 0) k *= 2;
    return k;
}

/// \brief Full-period parameter sets for m, sampled uniformly without
///        replacement: count_a multipliers and count_c increments.
///
/// Multipliers form the progression a = 1 + j*K (K as above); increments
/// are the units mod m. Sampling is deterministic in `seed` and integer
/// only. When a family is smaller than requested, throws capacity_error
/// naming the deficient dimension.
struct FullPeriodParams {
    std::vector<u64> multipliers;
    std::vector<u64> increments;
};

namespace detail {

// Draw `count` distinct indices from [0, size) deterministically. Small
// populations (or requests for most of one) get a partial Fisher-Yates
// over the materialized index list; large populations use rejection,
// which terminates fast because count << size there.
inline std::vector<u64> sample_distinct(u64 size, std::size_t count, SamplerState& rng) {
    std::vector<u64> picks;
    picks.reserve(count);
    if (size <= (1u << 20) || count * 2 >= size) {
        std::vector<u64> pool(size);
        for (u64 i = 0; i < size; ++i) pool[i] = i;
        for (std::size_t i = 0; i < count; ++i) {
            u64 j = i + rng.below(size - i);
            std::swap(pool[i], pool[j]);
            picks.push_back(pool[i]);
        }
    } else {
        std::unordered_set<u64> seen;
        while (picks.size() < count) {
            u64 v = rng.below(size);
            if (seen.insert(v).second) picks.push_back(v);
        }
    }
    return picks;
}

}  // namespace detail

[[nodiscard]] inline FullPeriodParams enumerate_full_period_params(u64 m, std::size_t count_a,
                                                                   std::size_t count_c, u64 seed) {
    if (m < 2) throw std::invalid_argument("enumerate_full_period_params: modulus must be >= 2");
    const Factorization f = factorize(m);
    const u64 stride = hull_dobell_stride(m, radical(f));
    // Multipliers 1, 1+K, ... strictly below m.
    const u64 avail_a = (m - 2) / stride + 1;
    const u64 avail_c = totient(f);
    if (count_a > avail_a)
        throw capacity_error("enumerate_full_period_params: only " + std::to_string(avail_a) +
                             " full-period multipliers exist for m=" + std::to_string(m));
    if (count_c > avail_c)
        throw capacity_error("enumerate_full_period_params: only " + std::to_string(avail_c) +
                             " coprime increments exist for m=" + std::to_string(m));

    SamplerState rng_a = SamplerState(seed).fork(0x61, 0);
    SamplerState rng_c = SamplerState(seed).fork(0x63, 0);

    FullPeriodParams out;
    out.multipliers.reserve(count_a);
    for (u64 j : detail::sample_distinct(avail_a, count_a, rng_a))
        out.multipliers.push_back(1 + j * stride);

    // Increments are the units mod m: not a progression, so sample by
    // rejection against the coprimality test (unit density is bounded
    // below well away from zero for m <= 2^32), or enumerate when the
    // request covers a sizable share of the units.
    out.increments.reserve(count_c);
    if (m <= (1u << 20) || count_c * 2 >= avail_c) {
        std::vector<u64> units;
        units.reserve(avail_c);
        for (u64 v = 0; v < m; ++v)
            if (std::gcd(v, m) == 1) units.push_back(v);
        for (u64 j : detail::sample_distinct(units.size(), count_c, rng_c))
            out.increments.push_back(units[j]);
    } else {
        std::unordered_set<u64> seen;
        while (out.increments.size() < count_c) {
            u64 v = rng_c.below(m);
            if (std::gcd(v, m) == 1 && seen.insert(v).second) out.increments.push_back(v);
        }
    }
    return out;
}

}  // namespace prnglab
