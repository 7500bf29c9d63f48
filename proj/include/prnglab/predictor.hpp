#pragma once

// Next-value prediction for congruential sequences, organized around the
// residue-number-system structure of the modulus.
//
// Background, briefly. Write m = prod_j p_j^{w_j}. For a full-period
// sequence the k lowest base-p_j digits of the value stream repeat with
// period exactly p_j^k. Two consequences:
//
//  1. Copying digits works: the k lowest digits of x_t equal those of
//     x_{t - p_j^k} whenever that index is in range. No arithmetic, one
//     look-back per prime.
//
//  2. Strided solving works: the subsequence x_t, x_{t-r}, x_{t-2r}, ...
//     (any stride r) is itself congruential with folded parameters, so
//     the residues mod p_j^{w_j} along it satisfy a linear recurrence
//     whose coefficients can be recovered from three or more entries
//     and then applied once to produce the next residue exactly.
//
// The two emulators here are idealizations of those mechanisms:
//
//  * predict_copy_only: per prime, look back p_j^k steps (k maximal for
//    the available context) and copy the whole residue; only the k
//    lowest digits are guaranteed, the rest ride along as guesses.
//
//  * predict_full: copy the guaranteed digits, then recover the strided
//    recurrence and solve for the remaining digits. Solving tries the
//    widest stride first and narrows until the recovered class of
//    multipliers pins the next residue uniquely; for full-period input
//    the stride-1 fallback always pins it once three elements are in
//    context, because consecutive differences are units mod m.
//
//  * predict_unseen: neither m nor its factors known. The modulus is
//    estimated greedily as max(context)+1, optionally snapped to the
//    nearest multiple of small prime powers whose digit-copy structure
//    the context exhibits, and predict_full runs under the estimate.
//
// Each predicted digit carries a provenance tag (copied / solved /
// guessed) so downstream accuracy reports can separate the mechanisms.
//
// The crackers are the non-streaming counterparts: crack_known_m
// recovers (a, c) — or an honest residue-class description when the
// context cannot pin them — and crack_unknown_m recovers m itself from
// second-order difference determinants, never returning a modulus that
// fails re-simulation.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "prnglab/common.hpp"
#include "prnglab/factor.hpp"
#include "prnglab/lcg.hpp"
#include "prnglab/modmath.hpp"

namespace prnglab {

enum class DigitTag : std::uint8_t { copied, solved, guessed };

/// Per-prime-power slice of a prediction: the residue mod p^w and one
/// provenance tag per digit (index i = i-th lowest base-p digit).
struct FactorPrediction {
    u64 prime = 0;
    u32 exponent = 0;
    u64 residue = 0;
    std::vector<DigitTag> digit_tags;
};

struct PredictionOutcome {
    u64 predicted = 0;
    u64 m_estimate = 0;
    std::vector<FactorPrediction> factors;
};

/// A residue class r (mod M). M == full modulus means uniquely pinned;
/// M == 1 means unconstrained; M == 0 is the "not applicable" state
/// used when a crack reports no modulus at all.
struct ResidueClass {
    u64 residue = 0;
    u64 modulus = 0;

    [[nodiscard]] bool pinned(u64 m) const { return modulus == m; }
    [[nodiscard]] bool contains(u64 v) const { return modulus != 0 && v % modulus == residue; }
};

/// Result of a parameter-recovery attempt. `modulus` is empty when the
/// context admits no single modulus (all difference determinants
/// vanish). `a_rep`/`c_rep` are canonical members of the classes and
/// always re-simulate the context exactly.
struct CrackResult {
    std::optional<u64> modulus;
    ResidueClass a_class;
    ResidueClass c_class;
    u64 a_rep = 0;
    u64 c_rep = 0;
    std::size_t elements_consumed = 0;
};

/// Greedy modulus bound: values lie in [0, m), so max(context)+1 is the
/// tightest bound the raw values support. Never exceeds the true m.
[[nodiscard]] inline u64 estimate_modulus_greedy(const std::vector<u64>& context) {
    if (context.empty()) throw std::invalid_argument("estimate_modulus_greedy: empty context");
    return *std::max_element(context.begin(), context.end()) + 1;
}

namespace detail {

[[nodiscard]] inline u64 largest_power_leq(u64 p, u64 t) {
    u64 pw = 1;
    while (pw <= t / p) pw *= p;
    return pw;  // p^k <= t < p^{k+1}, or 1 when t < p
}

[[nodiscard]] inline u32 log_floor(u64 p, u64 t) {
    u32 k = 0;
    u64 pw = 1;
    while (pw <= t / p) {
        pw *= p;
        ++k;
    }
    return k;
}

// CRT-combine (residue mod modulus) pairs with pairwise-coprime moduli.
[[nodiscard]] inline u64 crt_combine(const std::vector<std::pair<u64, u64>>& parts) {
    u64 x = 0, modulus = 1;
    for (const auto& [res, q] : parts) {
        if (q == 1) continue;
        if (modulus == 1) {
            x = res % q;
            modulus = q;
            continue;
        }
        auto [g, s, t] = ext_gcd(modulus % q, q);
        (void)g; (void)t;
        i128 sm = s % static_cast<i128>(q);
        if (sm < 0) sm += q;
        const u64 diff = mod_sub(res, x % q, q);
        x += modulus * mod_mul(diff, static_cast<u64>(sm), q);
        modulus *= q;
    }
    return x;
}

// Congruence class accumulator for a single prime power q = p^w:
// intersects constraints of the form  value * d === e (mod q), each of
// which pins `value` modulo p^{w - v_p(d)}. `merge` returns false on a
// contradiction (the data is not a congruential orbit mod q).
struct ClassAccumulator {
    u64 p, q;
    u32 w;
    u64 residue = 0;
    u32 strength = 0;  // value is known mod p^strength

    ClassAccumulator(u64 prime, u32 exponent, u64 value) : p(prime), q(value), w(exponent) {}

    [[nodiscard]] u64 p_pow(u32 e) const {
        u64 r = 1;
        for (u32 i = 0; i < e; ++i) r *= p;
        return r;
    }

    [[nodiscard]] bool merge_constraint(u64 d, u64 e) {
        const u32 v = valuation(d, p, w);
        const u64 pv = p_pow(v);
        if (e % pv != 0) return false;  // a*d has valuation >= v; e doesn't
        if (v == w) return true;        // no information
        const u64 q_red = q / pv;       // p^{w-v}
        const u64 rhs = (e / pv) % q_red;
        const u64 lhs = (d / pv) % q_red;  // unit mod q_red
        const u64 cls = mod_mul(rhs, mod_inverse(lhs, q_red), q_red);
        return merge_class(cls, w - v);
    }

    [[nodiscard]] bool merge_class(u64 cls, u32 s) {
        if (s <= strength) return cls % p_pow(s) == residue % p_pow(s);
        if (residue != cls % p_pow(strength)) return false;
        residue = cls;
        strength = s;
        return true;
    }
};

}  // namespace detail

// ------------------------------------------------------------------
// Emulators
// ------------------------------------------------------------------

/// \brief Pure copy emulator. Per prime p_j: look back r = p_j^k steps
///        (k maximal with r <= context length) and copy the whole
///        residue mod p_j^{w_j} from there. The k lowest digits are
///        guaranteed for full-period input and tagged `copied`; any
///        higher digits of the factor are tagged `guessed`.
[[nodiscard]] inline PredictionOutcome predict_copy_only(const std::vector<u64>& context, u64 m) {
    if (context.empty()) throw std::invalid_argument("predict_copy_only: empty context");
    for (u64 v : context)
        if (v >= m) throw std::invalid_argument("predict_copy_only: context value >= m");
    const u64 t = context.size();
    PredictionOutcome out;
    out.m_estimate = m;
    std::vector<std::pair<u64, u64>> parts;
    for (const auto& pp : factorize(m)) {
        const u64 r = detail::largest_power_leq(pp.prime, t);
        const u32 k = detail::log_floor(pp.prime, t);
        const u64 residue = context[t - r] % pp.value;
        FactorPrediction fp{pp.prime, pp.exponent, residue, {}};
        fp.digit_tags.assign(pp.exponent,
                             DigitTag::guessed);
        for (u32 i = 0; i < std::min(k, pp.exponent); ++i) fp.digit_tags[i] = DigitTag::copied;
        if (k >= pp.exponent)  // the whole residue has cycled; everything is a true copy
            std::fill(fp.digit_tags.begin(), fp.digit_tags.end(), DigitTag::copied);
        parts.emplace_back(residue, pp.value);
        out.factors.push_back(std::move(fp));
    }
    out.predicted = detail::crt_combine(parts);
    return out;
}

/// \brief Exact emulator. Per prime power p^w: copy the guaranteed low
///        digits, then solve the strided recurrence for the rest.
///
/// Stride search: for k' from min(w, log_p t) down to 0, take the
/// stride-p^{k'} residue subsequence ending at the target, accumulate
/// multiplier constraints from its consecutive difference pairs, and
/// accept the stride if the constraint class times the latest
/// difference pins the next residue uniquely (class strength s plus
/// valuation of the difference reaching w). Full-period contexts always
/// succeed by stride 1 once three elements are available. If no stride
/// pins the residue, that factor falls back to a whole-residue copy
/// with the unguaranteed digits tagged `guessed`.
[[nodiscard]] inline PredictionOutcome predict_full(const std::vector<u64>& context, u64 m) {
    if (context.empty()) throw std::invalid_argument("predict_full: empty context");
    for (u64 v : context)
        if (v >= m) throw std::invalid_argument("predict_full: context value >= m");
    const u64 t = context.size();
    PredictionOutcome out;
    out.m_estimate = m;
    std::vector<std::pair<u64, u64>> parts;
    for (const auto& pp : factorize(m)) {
        const u32 k_cap = std::min(detail::log_floor(pp.prime, t), pp.exponent);
        u64 look = 1;
        for (u32 i = 0; i < k_cap; ++i) look *= pp.prime;
        const u64 low_mod = look;  // p^{k_cap}
        const u64 copied_src = context[t - look] % pp.value;

        FactorPrediction fp{pp.prime, pp.exponent, copied_src, {}};
        fp.digit_tags.assign(pp.exponent, DigitTag::guessed);
        for (u32 i = 0; i < k_cap; ++i) fp.digit_tags[i] = DigitTag::copied;

        if (k_cap == pp.exponent) {
            // Whole residue cycles within the look-back: copy is exact.
            std::fill(fp.digit_tags.begin(), fp.digit_tags.end(), DigitTag::copied);
            parts.emplace_back(copied_src, pp.value);
            out.factors.push_back(std::move(fp));
            continue;
        }

        bool solved = false;
        for (u32 kp = k_cap + 1; kp-- > 0 && !solved;) {
            u64 r = 1;
            for (u32 i = 0; i < kp; ++i) r *= pp.prime;
            const u64 n = t / r;
            if (n < 2) continue;
            // Strided residues, oldest first, ending at context[t - r].
            std::vector<u64> z(n);
            for (u64 i = 0; i < n; ++i) z[i] = context[t - (n - i) * r] % pp.value;

            detail::ClassAccumulator acc(pp.prime, pp.exponent, pp.value);
            bool contradiction = false;
            for (u64 j = 0; j + 2 < n; ++j) {
                const u64 d = mod_sub(z[j + 1], z[j], pp.value);
                const u64 e = mod_sub(z[j + 2], z[j + 1], pp.value);
                if (!acc.merge_constraint(d, e)) {
                    contradiction = true;
                    break;
                }
            }
            if (contradiction) continue;
            const u64 delta = mod_sub(z[n - 1], z[n - 2], pp.value);
            const u32 v_delta = valuation(delta, pp.prime, pp.exponent);
            if (acc.strength + v_delta < pp.exponent) continue;  // residue not pinned
            // next = z_last + a' * (z_last - z_prev); any class member
            // gives the same answer once pinned.
            u64 next = mod_add(z[n - 1], mod_mul(acc.residue, delta, pp.value), pp.value);
            // Low digits come from the copy path by definition.
            next = next - next % low_mod + copied_src % low_mod;
            fp.residue = next;
            for (u32 i = k_cap; i < pp.exponent; ++i) fp.digit_tags[i] = DigitTag::solved;
            solved = true;
        }
        parts.emplace_back(fp.residue, pp.value);
        out.factors.push_back(std::move(fp));
    }
    out.predicted = detail::crt_combine(parts);
    return out;
}

/// \brief Emulator for unseen moduli. Estimates m greedily, optionally
///        snaps the estimate to the digit-copy structure the context
///        exhibits (see below), then runs predict_full under it.
///
/// Refinement: for each small prime p, find the largest k such that for
/// every j <= k the context satisfies x_t === x_{t-p^j} (mod p^j) at all
/// checkable positions, requiring p^j <= len/2 so at least half the
/// context backs each check. The estimate is rounded to the nearest
/// multiple of prod p^k (rounded up if that would undercut the greedy
/// bound). A full-period context of length >= 2 p^k exhibits the
/// structure for every p^k dividing m, so with enough context the
/// snapped estimate recovers highly composite moduli exactly.
[[nodiscard]] inline PredictionOutcome predict_unseen(const std::vector<u64>& context,
                                                      bool refine = true) {
    const u64 bound = std::max<u64>(2, estimate_modulus_greedy(context));
    u64 m_est = bound;
    if (refine) {
        const u64 len = context.size();
        u64 snap = 1;
        for (u64 p : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull}) {
            u64 pj = 1;
            u64 level = 1;
            while (true) {
                if (pj > (len / 2) / p) break;  // p^{j} beyond half the context
                pj *= p;
                bool ok = true;
                for (u64 i = pj; i < len && ok; ++i)
                    ok = (context[i] % pj) == (context[i - pj] % pj);
                if (!ok) break;
                level = pj;
            }
            snap *= level;
        }
        if (snap > 1) {
            u64 rounded = (m_est + snap / 2) / snap * snap;
            if (rounded < bound) rounded += snap;
            m_est = rounded;
        }
    }
    PredictionOutcome out = predict_full(context, m_est);
    return out;
}

// ------------------------------------------------------------------
// Crackers
// ------------------------------------------------------------------

namespace detail {

// Core recovery routine; returns nullopt instead of throwing so the
// unknown-modulus search can probe candidates cheaply.
[[nodiscard]] inline std::optional<CrackResult> try_crack(const std::vector<u64>& context, u64 m) {
    const std::size_t len = context.size();
    for (u64 v : context)
        if (v >= m) return std::nullopt;

    const Factorization factors = factorize(m);
    std::vector<ClassAccumulator> acc;
    acc.reserve(factors.size());
    for (const auto& pp : factors) acc.emplace_back(pp.prime, pp.exponent, pp.value);

    auto pinned_all = [&] {
        for (std::size_t j = 0; j < factors.size(); ++j)
            if (acc[j].strength < factors[j].exponent) return false;
        return true;
    };

    std::size_t consumed = len;
    for (std::size_t i = 0; i + 2 < len; ++i) {
        for (std::size_t j = 0; j < factors.size(); ++j) {
            const u64 q = factors[j].value;
            const u64 d = mod_sub(context[i + 1] % q, context[i] % q, q);
            const u64 e = mod_sub(context[i + 2] % q, context[i + 1] % q, q);
            if (!acc[j].merge_constraint(d, e)) return std::nullopt;
        }
        if (consumed == len && pinned_all()) consumed = i + 3;
    }

    CrackResult out;
    out.modulus = m;
    out.elements_consumed = consumed;

    // Marginal class for a, CRT across prime powers.
    std::vector<std::pair<u64, u64>> a_parts;
    u64 a_mod = 1;
    for (const auto& a : acc) {
        a_parts.emplace_back(a.residue, a.p_pow(a.strength));
        a_mod *= a.p_pow(a.strength);
    }
    out.a_class = {crt_combine(a_parts), a_mod};

    // Canonical multiplier: smallest positive class member. The class
    // a === 0 (mod m) has no member in (0, m) — no valid generator.
    out.a_rep = out.a_class.modulus == 0 ? 1 : out.a_class.residue;
    if (out.a_rep == 0) {
        if (out.a_class.modulus >= m) return std::nullopt;
        out.a_rep = std::max<u64>(out.a_class.modulus, 1);
    }

    // c is a function of a: c = x1 - a*x0. Its marginal class widens by
    // the valuation of x0 at each prime.
    if (len >= 2) {
        std::vector<std::pair<u64, u64>> c_parts;
        u64 c_mod = 1;
        for (std::size_t j = 0; j < factors.size(); ++j) {
            const u64 q = factors[j].value;
            const u64 z0 = context[0] % q, z1 = context[1] % q;
            const u32 sc = std::min(factors[j].exponent,
                                    acc[j].strength + valuation(z0, factors[j].prime, factors[j].exponent));
            const u64 qc = acc[j].p_pow(sc);
            c_parts.emplace_back(mod_sub(z1, mod_mul(acc[j].residue, z0, q), q) % std::max<u64>(qc, 1), qc);
            c_mod *= qc;
        }
        out.c_class = {crt_combine(c_parts), c_mod};
        out.c_rep = mod_sub(context[1], mod_mul(out.a_rep, context[0], m), m);
    } else {
        out.c_class = {0, 1};
        out.c_rep = 0;
    }

    // Defensive re-simulation: the telescoped difference constraints
    // guarantee this holds; a failure is a logic error, not bad input.
    u64 x = context[0];
    for (std::size_t i = 1; i < len; ++i) {
        x = mod_add(mod_mul(out.a_rep, x, m), out.c_rep, m);
        if (x != context[i]) throw std::logic_error("try_crack: representative failed re-simulation");
    }
    return out;
}

[[nodiscard]] constexpr u128 gcd128(u128 a, u128 b) {
    while (b != 0) {
        u128 r = a % b;
        a = b;
        b = r;
    }
    return a;
}

}  // namespace detail

/// \brief Recover (a, c) given m. Needs >= 3 elements. Returns pinned
///        values or honest residue classes; throws inconsistency_error
///        when no (a, c) explains the context mod m.
[[nodiscard]] inline CrackResult crack_known_m(const std::vector<u64>& context, u64 m) {
    if (context.size() < 3)
        throw insufficient_data_error("crack_known_m: need at least 3 elements");
    if (m < 2) throw std::invalid_argument("crack_known_m: modulus must be >= 2");
    for (u64 v : context)
        if (v >= m) throw std::invalid_argument("crack_known_m: context value >= m");
    auto r = detail::try_crack(context, m);
    if (!r)
        throw inconsistency_error("crack_known_m: context is not a congruential orbit mod " +
                                  std::to_string(m));
    return *r;
}

/// \brief Recover m (and then a, c) from raw values alone.
///
/// Consecutive differences satisfy d_{t+1} === a d_t (mod m), so the
/// second-order determinants d_{t+1} d_{t-1} - d_t^2 are all multiples
/// of m; their gcd g is a small multiple of m with high probability.
/// The answer is the smallest divisor of g that is >= max(context)+1,
/// within the supported modulus range, and consistent under
/// crack_known_m re-simulation. All-zero determinants (e.g. arithmetic
/// progressions) yield the no-modulus result rather than an error.
[[nodiscard]] inline CrackResult crack_unknown_m(const std::vector<u64>& context) {
    if (context.size() < 4)
        throw insufficient_data_error("crack_unknown_m: need at least 4 elements");
    const std::size_t len = context.size();

    std::vector<i128> d(len - 1);
    for (std::size_t i = 0; i + 1 < len; ++i)
        d[i] = static_cast<i128>(context[i + 1]) - static_cast<i128>(context[i]);

    u128 g = 0;
    for (std::size_t j = 1; j + 1 < d.size(); ++j) {
        i128 det = d[j + 1] * d[j - 1] - d[j] * d[j];
        g = detail::gcd128(g, det < 0 ? static_cast<u128>(-det) : static_cast<u128>(det));
    }

    CrackResult unknown;
    unknown.modulus = std::nullopt;
    unknown.a_class = unknown.c_class = ResidueClass{0, 0};
    unknown.elements_consumed = len;
    if (g == 0) return unknown;

    const u64 bound = std::max<u64>(2, estimate_modulus_greedy(context));
    constexpr u64 max_modulus = u64{1} << 32;
    constexpr u64 cofactor_cap = u64{1} << 20;

    // Divisors of g that are >= bound correspond to cofactors <= g/bound;
    // enumerate the (few) cofactors and test candidates smallest first.
    std::vector<u64> candidates;
    const u128 e_max128 = g / bound;
    const u64 e_max = e_max128 > cofactor_cap ? cofactor_cap : static_cast<u64>(e_max128);
    for (u64 e = 1; e <= e_max; ++e) {
        if (g % e != 0) continue;
        const u128 cand = g / e;
        if (cand >= bound && cand <= max_modulus) candidates.push_back(static_cast<u64>(cand));
    }
    std::sort(candidates.begin(), candidates.end());
    for (u64 cand : candidates) {
        if (auto r = detail::try_crack(context, cand)) {
            r->modulus = cand;
            r->elements_consumed = len;  // every element fed the determinant gcd
            return *r;
        }
    }
    return unknown;
}

}  // namespace prnglab
