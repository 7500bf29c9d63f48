#include <gtest/gtest.h>

#include <prnglab/lcg.hpp>
#include <prnglab/rns.hpp>

#include "oracles.hpp"

using namespace prnglab;

TEST(Digits, BinaryExpansionOfKnownValue) {
    const auto d = to_digits(629, factorize(2048));
    ASSERT_EQ(d.digits_per_factor.size(), 1u);
    const std::vector<u32> bits{1, 0, 1, 0, 1, 1, 1, 0, 0, 1, 0};  // 629, lowest bit first
    EXPECT_EQ(d.digits_per_factor[0], bits);
}

TEST(Digits, MixedRadixKnownValue) {
    const auto d = to_digits(1033, factorize(1800));  // residues (1, 7, 8)
    ASSERT_EQ(d.digits_per_factor.size(), 3u);
    EXPECT_EQ(d.digits_per_factor[0], (std::vector<u32>{1, 0, 0}));  // 1 in base 2
    EXPECT_EQ(d.digits_per_factor[1], (std::vector<u32>{1, 2}));     // 7 in base 3
    EXPECT_EQ(d.digits_per_factor[2], (std::vector<u32>{3, 1}));     // 8 in base 5
}

TEST(Digits, ZeroIsAllZeros) {
    const auto d = to_digits(0, factorize(1800));
    for (const auto& v : d.digits_per_factor)
        for (u32 digit : v) EXPECT_EQ(digit, 0u);
}

TEST(Digits, RoundTripIsIdentity) {
    for (u64 m : {6u, 360u, 1800u, 2048u, 2352u, 65536u}) {
        const auto f = factorize(m);
        SamplerState rng(60 + m);
        for (int i = 0; i < 500; ++i) {
            const u64 x = rng.below(m);
            EXPECT_EQ(from_digits(to_digits(x, f)), x) << "m=" << m;
        }
    }
}

TEST(Digits, ReconstructionValidatesShape) {
    auto d = to_digits(100, factorize(360));
    d.digits_per_factor.pop_back();
    EXPECT_THROW(from_digits(d), std::invalid_argument);
    auto e = to_digits(100, factorize(360));
    e.digits_per_factor[0][0] = 7;  // not a base-2 digit
    EXPECT_THROW(from_digits(e), std::domain_error);
}

TEST(DigitPeriods, TheoryTable) {
    EXPECT_EQ(digit_period_theory(2, 1), 2u);
    EXPECT_EQ(digit_period_theory(2, 11), 2048u);
    EXPECT_EQ(digit_period_theory(3, 2), 9u);
    EXPECT_EQ(digit_period_theory(7, 2), 49u);
}

TEST(DigitPeriods, StridingDividesOutTheCommonFactor) {
    EXPECT_EQ(reduced_digit_period(2, 5, 2), 16u);
    EXPECT_EQ(reduced_digit_period(2, 3, 8), 1u);  // stride swallows the whole digit
    EXPECT_EQ(reduced_digit_period(3, 2, 2), 9u);  // coprime stride changes nothing
    EXPECT_EQ(reduced_digit_period(2, 4, 16), 1u);
    EXPECT_EQ(reduced_digit_period(2, 4, 6), 8u);
    EXPECT_EQ(reduced_digit_period(5, 2, 10), 5u);
}

TEST(MinimalPeriod, MatchesNaiveScan) {
    SamplerState rng(61);
    for (int i = 0; i < 300; ++i) {
        // Build a stream with a planted period and a noisy suffix length.
        const u64 d = rng.in_range(1, 12);
        const u64 len = rng.in_range(2, 64);
        std::vector<u64> v(len);
        for (u64 j = 0; j < len; ++j) v[j] = rng.below(4);
        for (u64 j = d; j < len; ++j) v[j] = v[j - d];  // force periodicity
        const auto mine = minimal_period(v);
        const auto ref = oracle::naive_min_period(v);
        EXPECT_EQ(mine, ref) << "len=" << len << " planted=" << d;
    }
}

TEST(MinimalPeriod, RefusesUnconfirmedPeriods) {
    // [0,1,2,3]: technically period 4, but a window of 4 cannot confirm it.
    EXPECT_EQ(minimal_period(std::vector<u64>{0, 1, 2, 3}), std::nullopt);
    EXPECT_EQ(minimal_period(std::vector<u64>{1, 1, 1, 1}), std::optional<u64>(1));
    EXPECT_EQ(minimal_period(std::vector<u64>{0, 1, 0, 1, 0}), std::optional<u64>(2));
    EXPECT_THROW(minimal_period(std::vector<u64>{7}), insufficient_data_error);
}

TEST(MeasuredPeriods, LowestBitAlternates) {
    const auto seq = lcg_sequence(0, LcgParams(2048, 293, 1033), 64);
    EXPECT_EQ(measure_digit_period(seq, 2, 1), std::optional<u64>(2));
}

TEST(MeasuredPeriods, BaseThreeDigitOnMixedModulus) {
    // 7776 = 2^5 * 3^5; a = 13 satisfies the full-period conditions.
    const auto seq = lcg_sequence(1, LcgParams(7776, 13, 1), 160);
    EXPECT_EQ(measure_digit_period(seq, 3, 3), std::optional<u64>(27));
}

TEST(MeasuredPeriods, WindowTooShortIsNotAnAnswer) {
    const auto seq = lcg_sequence(0, LcgParams(2048, 293, 1033), 100);
    // Bit 7 has period 128; 100 samples cannot confirm it.
    EXPECT_EQ(measure_digit_period(seq, 2, 7), std::nullopt);
}

// For full-period parameters every prime-power digit is periodic with
// period exactly p^k, whatever the modulus mix. Checked on a batch of
// random admissible triples against the measured stream.
TEST(MeasuredPeriods, FullPeriodDigitsHitTheoryExactly) {
    SamplerState rng(62);
    int tested = 0;
    while (tested < 25) {
        const u64 m = rng.in_range(4, 5000);
        const auto f = factorize(m);
        if (f.size() < 2) continue;  // want genuinely mixed radices
        const u64 K = hull_dobell_stride(m, radical(f));
        if (K > m - 1) continue;     // no multiplier other than 1? still fine, but vary
        auto fp = enumerate_full_period_params(m, 1, 1, 4000 + tested);
        const LcgParams p(m, fp.multipliers[0], fp.increments[0]);
        for (const auto& pp : f) {
            const u64 want = pp.value;
            const auto seq = lcg_sequence(rng.below(m), p, 2 * want + 3);
            for (u32 k = 1; k <= pp.exponent; ++k) {
                const u64 theory = digit_period_theory(pp.prime, k);
                EXPECT_EQ(measure_digit_period(seq, pp.prime, k), std::optional<u64>(theory))
                    << "m=" << m << " p=" << pp.prime << " k=" << k;
            }
        }
        ++tested;
    }
}

TEST(MeasuredPeriods, StridedStreamsShrinkByTheSharedFactor) {
    const LcgParams p(7776, 13, 1);
    for (u64 r : {2u, 3u, 9u, 4u}) {
        const auto folded = fold_params(p, r);
        std::vector<u64> strided;
        u64 x = 1;
        for (int i = 0; i < 600; ++i) {
            strided.push_back(x);
            x = fold_step(x, folded, p.m);
        }
        for (const auto& pp : factorize(p.m)) {
            for (u32 k = 1; k <= pp.exponent; ++k) {
                const u64 want = reduced_digit_period(pp.prime, k, r);
                if (2 * want + 2 > strided.size()) continue;
                EXPECT_EQ(measure_digit_period(strided, pp.prime, k), std::optional<u64>(want))
                    << "r=" << r << " p=" << pp.prime << " k=" << k;
            }
        }
    }
}
