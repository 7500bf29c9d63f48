#pragma once

// Deterministic 64-bit sampler used everywhere randomness is needed:
// splitmix64 (Steele, Lea, Vigna) — golden-ratio increment, two
// xor-multiply finalizer rounds. Chosen because it is trivially
// portable: byte-identical streams on every platform, no environment
// or library dependence, cheap forking for per-record substreams.

#include <cstdint>

#include "prnglab/common.hpp"

namespace prnglab {

namespace detail {
// The splitmix64 output finalizer, also used standalone as a 64-bit mixer.
[[nodiscard]] constexpr u64 mix64(u64 z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}
}  // namespace detail

class SamplerState {
  public:
    explicit constexpr SamplerState(u64 seed) : state_(seed) {}

    /// Next raw 64-bit draw.
    constexpr u64 next() {
        state_ += 0x9E3779B97F4A7C15ull;
        return detail::mix64(state_);
    }

    /// Uniform draw from [0, n) by rejection: raw draws above the
    /// largest multiple of n are discarded, so no modulo bias.
    constexpr u64 below(u64 n) {
        // n == 0 would be a caller bug; 1 short-circuits.
        if (n <= 1) return 0;
        const u64 limit = ~u64{0} - (~u64{0} % n + 1) % n;  // last accepted raw value
        u64 z = next();
        while (z > limit) z = next();
        return z % n;
    }

    /// Uniform draw from [lo, hi] inclusive.
    constexpr u64 in_range(u64 lo, u64 hi) { return lo + below(hi - lo + 1); }

    /// Independent child stream identified by (domain, index). Distinct
    /// (domain, index) pairs give unrelated streams; the derivation is a
    /// fixed function of the parent seed only (not of draws made so
    /// far), so forks may happen in any order — this is what makes
    /// record-parallel generation order-independent.
    [[nodiscard]] constexpr SamplerState fork(u64 domain, u64 index) const {
        u64 child = detail::mix64(seed_tag_ ^ (domain * 0x9E3779B97F4A7C15ull));
        child = detail::mix64(child ^ (index + 0xD1B54A32D192ED03ull));
        return SamplerState(child, child);
    }

    [[nodiscard]] constexpr u64 seed_tag() const { return seed_tag_; }

  private:
    constexpr SamplerState(u64 seed, u64 tag) : state_(seed), seed_tag_(tag) {}

    u64 state_;
    u64 seed_tag_ = state_;
};

}  // namespace prnglab
