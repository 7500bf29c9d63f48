#pragma once

// Sequence-to-token encoding for trainers, two modes:
//
//  * unique: one token per integer, token id = value. Needs a vocabulary
//    as large as the modulus.
//  * base_b: each integer becomes exactly D base-b digits, least
//    significant digit first, zero-padded — fixed stride so the
//    (integer index, digit index) pair of every token is a pure
//    function of its offset. Those pairs ("abacus" indices) are emitted
//    alongside the tokens for position-embedding schemes that encode
//    integer and digit position separately.
//
// An optional drop of the final token aligns streams to next-token
// training windows (512 two-byte integers -> 1023 tokens); it is an
// explicit spec field so corpora stay bit-exact reproducible.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "prnglab/common.hpp"

namespace prnglab {

struct TokenizerSpec {
    enum class Mode : std::uint8_t { unique, base_b };

    Mode mode = Mode::unique;
    u64 base = 0;            // base_b: the digit base; unique: vocabulary capacity
    u32 digits_per_int = 1;  // D; always 1 in unique mode
    bool drop_last_token = false;

    [[nodiscard]] u64 vocab_size() const { return base; }

    /// Spec for values in [0, m_cap): unique mode needs vocab m_cap;
    /// base_b needs D = ceil(log_b m_cap) digits.
    [[nodiscard]] static TokenizerSpec unique_for(u64 m_cap, bool drop_last = false) {
        if (m_cap < 2) throw std::invalid_argument("TokenizerSpec: capacity must be >= 2");
        return {Mode::unique, m_cap, 1, drop_last};
    }

    [[nodiscard]] static TokenizerSpec base_b_for(u64 b, u64 m_cap, bool drop_last = false) {
        if (b < 2) throw std::invalid_argument("TokenizerSpec: base must be >= 2");
        if (m_cap < 2) throw std::invalid_argument("TokenizerSpec: capacity must be >= 2");
        u32 d = 1;
        u128 reach = b;
        while (reach < m_cap) {
            reach *= b;
            ++d;
        }
        return {Mode::base_b, b, d, drop_last};
    }
};

struct TokenStream {
    TokenizerSpec spec;
    std::vector<u64> tokens;
    std::vector<u32> int_positions;
    std::vector<u32> digit_positions;
};

/// Digits of x, LSD first, zero-padded to exactly D entries.
/// Throws std::overflow_error when x does not fit in D base-b digits.
[[nodiscard]] inline std::vector<u32> to_base_b(u64 x, u64 b, u32 d) {
    if (b < 2 || d == 0) throw std::invalid_argument("to_base_b: need b >= 2 and D >= 1");
    std::vector<u32> out(d);
    u64 rest = x;
    for (u32 i = 0; i < d; ++i) {
        out[i] = static_cast<u32>(rest % b);
        rest /= b;
    }
    if (rest != 0)
        throw std::overflow_error("to_base_b: " + std::to_string(x) + " needs more than " +
                                  std::to_string(d) + " base-" + std::to_string(b) + " digits");
    return out;
}

/// Positional evaluation, inverse of to_base_b.
/// Throws std::domain_error on a digit >= b.
[[nodiscard]] inline u64 from_base_b(const std::vector<u32>& digits, u64 b) {
    if (b < 2) throw std::invalid_argument("from_base_b: need b >= 2");
    u128 x = 0, place = 1;
    for (std::size_t i = 0; i < digits.size(); ++i) {
        if (digits[i] >= b)
            throw std::domain_error("from_base_b: digit " + std::to_string(digits[i]) +
                                    " at index " + std::to_string(i) + " exceeds base");
        x += place * digits[i];
        place *= b;
    }
    if (x > ~u64{0}) throw std::overflow_error("from_base_b: value exceeds 64 bits");
    return static_cast<u64>(x);
}

[[nodiscard]] inline TokenStream tokenize_sequence(const std::vector<u64>& seq,
                                                   const TokenizerSpec& spec) {
    TokenStream out{spec, {}, {}, {}};
    const u32 d = spec.mode == TokenizerSpec::Mode::unique ? 1 : spec.digits_per_int;
    out.tokens.reserve(seq.size() * d);
    out.int_positions.reserve(seq.size() * d);
    out.digit_positions.reserve(seq.size() * d);
    for (std::size_t i = 0; i < seq.size(); ++i) {
        if (spec.mode == TokenizerSpec::Mode::unique) {
            if (seq[i] >= spec.base)
                throw std::overflow_error("tokenize_sequence: value at index " +
                                          std::to_string(i) + " exceeds vocabulary");
            out.tokens.push_back(seq[i]);
            out.int_positions.push_back(static_cast<u32>(i));
            out.digit_positions.push_back(0);
            continue;
        }
        std::vector<u32> digits;
        try {
            digits = to_base_b(seq[i], spec.base, spec.digits_per_int);
        } catch (const std::overflow_error&) {
            throw std::overflow_error("tokenize_sequence: value at index " + std::to_string(i) +
                                      " does not fit " + std::to_string(spec.digits_per_int) +
                                      " digits");
        }
        for (u32 j = 0; j < d; ++j) {
            out.tokens.push_back(digits[j]);
            out.int_positions.push_back(static_cast<u32>(i));
            out.digit_positions.push_back(j);
        }
    }
    if (spec.drop_last_token && !out.tokens.empty()) {
        out.tokens.pop_back();
        out.int_positions.pop_back();
        out.digit_positions.pop_back();
    }
    return out;
}

/// Inverse of tokenize_sequence. Incomplete trailing integers come back
/// in `partial_tail` instead of being silently discarded.
struct DetokenizedSequence {
    std::vector<u64> values;
    std::vector<u64> partial_tail;  // trailing tokens of an incomplete integer
};

[[nodiscard]] inline DetokenizedSequence detokenize_stream(const TokenStream& stream) {
    const auto& spec = stream.spec;
    const u32 d = spec.mode == TokenizerSpec::Mode::unique ? 1 : spec.digits_per_int;
    const std::size_t n = stream.tokens.size();
    if (stream.int_positions.size() != n || stream.digit_positions.size() != n)
        throw format_error("detokenize_stream: index arrays disagree with token count");
    DetokenizedSequence out;
    out.values.reserve(n / d);
    std::vector<u32> digits;
    for (std::size_t i = 0; i < n; ++i) {
        const u32 expect_int = static_cast<u32>(i / d);
        const u32 expect_digit = static_cast<u32>(i % d);
        if (stream.int_positions[i] != expect_int || stream.digit_positions[i] != expect_digit)
            throw format_error("detokenize_stream: malformed position indices at token " +
                               std::to_string(i));
        if (spec.mode == TokenizerSpec::Mode::unique) {
            if (stream.tokens[i] >= spec.base)
                throw std::domain_error("detokenize_stream: token exceeds vocabulary");
            out.values.push_back(stream.tokens[i]);
            continue;
        }
        if (stream.tokens[i] >= spec.base)
            throw std::domain_error("detokenize_stream: token exceeds base at index " +
                                    std::to_string(i));
        digits.push_back(static_cast<u32>(stream.tokens[i]));
        if (digits.size() == d) {
            out.values.push_back(from_base_b(digits, spec.base));
            digits.clear();
        }
    }
    for (u32 tok : digits) out.partial_tail.push_back(tok);
    return out;
}

}  // namespace prnglab
