#pragma once

// Corpus generation and storage for the two training protocols:
//
//  * fixed modulus (fm): one m; 64 test multipliers and 64 test
//    increments reserved from the full-period family; N train records
//    drawn uniformly over all (a, c) — full period or not — excluding
//    the reserved values; test records are the 64 x 64 grid.
//
//  * unseen moduli (um): a test modulus list M_test; m_max =
//    floor(1.2 * max(M_test)); n_m train moduli sampled from
//    [L, m_max] \ M_test; per train modulus an n_a x n_c parameter
//    grid; per test modulus the reserved 64 x 64 full-period grid.
//
// Everything is a pure function of the manifest: every random draw
// comes from a splitmix64 substream forked from (seed, domain, index),
// so records can be generated in any order, on any thread count, with
// byte-identical results. The generation path is integer-only.
//
// On disk a corpus is a directory: manifest.json (parameters, tokenizer
// spec, token digest), records.jsonl (one metadata line per record),
// tokens.bin (all sequence values, tokenized). The binary layout is
// fixed little-endian: magic "LCGT", version u16, flags u16 (bit 0 =
// base-b mode, bit 1 = drop-last), base u32, digits_per_int u16,
// seq_len u32 (integers per record), record count u64, then each
// record's tokens back to back, one byte per token when the vocabulary
// fits 256 and two bytes otherwise.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <unordered_set>
#include <vector>

#include "json.hpp"
#include "prnglab/common.hpp"
#include "prnglab/lcg.hpp"
#include "prnglab/rng.hpp"
#include "prnglab/tokenizer.hpp"

namespace prnglab {

struct SequenceRecord {
    u64 idx = 0;
    u64 m = 0, a = 0, c = 0, x0 = 0;
    enum class Split : std::uint8_t { train, test } split = Split::train;
    enum class PeriodClass : std::uint8_t { short_period, long_period } period_class =
        PeriodClass::long_period;
    std::vector<u64> values;  // length L+1, values[0] == x0
};

struct DatasetManifest {
    enum class Task : std::uint8_t { fm, um } task = Task::fm;
    u64 seed = 0;
    u32 seq_len = 0;  // L: model context in integers; records carry L+1 values
    u64 n_train = 0;  // N

    u64 m = 0;                // fm
    std::vector<u64> m_test;  // um
    u64 m_max = 0;            // um, derived
    u64 n_m = 0, n_a = 0, n_c = 0;  // um train grid

    u32 n_test_a = 64, n_test_c = 64;  // requested test grid (um: clamped per modulus)
    std::vector<u64> excluded_a, excluded_c;  // reserved test values (union over test moduli)
    // um: the actual per-test-modulus grid sizes after clamping to the
    // number of full-period multipliers/coprime increments available.
    std::vector<std::array<u32, 2>> um_test_grids;

    u32 format_version = 1;
};

// ------------------------------------------------------------------
// Sizing
// ------------------------------------------------------------------

struct UmPlan {
    u64 n_m = 0, n_a = 0, n_c = 0;
    bool n_m_below_recommended = false;  // n_m < m_test/4: corpus thinner than the protocol likes
};

/// Solve n_a = n_c = round(sqrt(N / (m_test/4))) (min 1, half-up) and
/// n_m = ceil(N / (n_a*n_c)). Throws sizing_error when N < m_test/4,
/// where the grid cannot reach N without degenerate sizes.
[[nodiscard]] inline UmPlan plan_um_sizes(u64 n_records, u64 m_test) {
    if (m_test < 2) throw std::invalid_argument("plan_um_sizes: m_test must be >= 2");
    if (n_records == 0 || n_records * 4 < m_test)
        throw sizing_error("plan_um_sizes: N=" + std::to_string(n_records) +
                           " cannot cover m_test/4=" + std::to_string(m_test / 4));
    const double per_axis = std::sqrt(4.0 * static_cast<double>(n_records) /
                                      static_cast<double>(m_test));
    UmPlan plan;
    plan.n_a = plan.n_c = std::max<u64>(1, static_cast<u64>(per_axis + 0.5));
    plan.n_m = (n_records + plan.n_a * plan.n_c - 1) / (plan.n_a * plan.n_c);
    plan.n_m_below_recommended = plan.n_m * 4 < m_test;
    return plan;
}

// ------------------------------------------------------------------
// Period classification
// ------------------------------------------------------------------

/// Cycle length <= L, without computing the cycle length: any orbit's
/// pre-periodic tail is at most 64 steps (each prime p | gcd(a, m)
/// contracts its component by a factor p per step and exponents are
/// <= 32 for m <= 2^32), so skip the tail, then look for a state
/// return within L steps.
[[nodiscard]] inline bool orbit_cycle_within(const LcgParams& p, u64 x0, u64 limit) {
    u64 x = x0;
    for (int i = 0; i < 64; ++i) x = lcg_step(x, p);
    const u64 anchor = x;
    for (u64 i = 0; i < limit; ++i) {
        x = lcg_step(x, p);
        if (x == anchor) return true;
    }
    return false;
}

[[nodiscard]] inline SequenceRecord::PeriodClass classify_period(const LcgParams& p, u64 x0,
                                                                 u64 limit) {
    return orbit_cycle_within(p, x0, limit) ? SequenceRecord::PeriodClass::short_period
                                            : SequenceRecord::PeriodClass::long_period;
}

// ------------------------------------------------------------------
// Generation
// ------------------------------------------------------------------

namespace detail {

// Substream domains. Any fixed assignment works; these are frozen by
// the golden corpus digests.
enum StreamDomain : u64 {
    dom_fm_train = 1,
    dom_fm_test_params = 2,
    dom_fm_test_x0 = 3,
    dom_um_moduli = 4,
    dom_um_params = 5,
    dom_um_train_x0 = 6,
    dom_um_test_params = 7,
    dom_um_test_x0 = 8,
};

// Uniform draw from [lo, hi) excluding a value set, by rejection.
[[nodiscard]] inline u64 draw_excluding(SamplerState& rng, u64 lo, u64 hi,
                                        const std::unordered_set<u64>& excluded) {
    while (true) {
        const u64 v = rng.in_range(lo, hi - 1);
        if (!excluded.contains(v)) return v;
    }
}

// Run fn(i) for i in [0, n) across `threads` workers in fixed chunks.
// The first exception a worker raises is rethrown on the caller after
// all workers have joined.
inline void parallel_for(u64 n, unsigned threads, const std::function<void(u64)>& fn) {
    if (threads <= 1 || n < 2) {
        for (u64 i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::mutex mu;
    std::exception_ptr first;
    const u64 chunk = (n + threads - 1) / threads;
    for (unsigned w = 0; w < threads; ++w) {
        const u64 lo = w * chunk, hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn, &mu, &first] {
            try {
                for (u64 i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                const std::lock_guard<std::mutex> lock(mu);
                if (!first) first = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first) std::rethrow_exception(first);
}

}  // namespace detail

/// Fixed-modulus corpus. Train records first (idx 0..N-1), then the
/// test grid in (a-index, c-index) order. Fills the manifest's
/// excluded_a/excluded_c with the reserved test values.
[[nodiscard]] inline std::vector<SequenceRecord> generate_fm(DatasetManifest& man,
                                                             unsigned threads = 1) {
    if (man.task != DatasetManifest::Task::fm)
        throw std::invalid_argument("generate_fm: manifest task is not fm");
    if (man.m < 2 || man.seq_len == 0)
        throw std::invalid_argument("generate_fm: manifest needs m >= 2 and L >= 1");
    const u64 m = man.m;
    const SamplerState root(man.seed);

    const auto reserved = enumerate_full_period_params(
        m, man.n_test_a, man.n_test_c, root.fork(detail::dom_fm_test_params, 0).seed_tag());
    man.excluded_a = reserved.multipliers;
    man.excluded_c = reserved.increments;
    const std::unordered_set<u64> test_a(reserved.multipliers.begin(), reserved.multipliers.end());
    const std::unordered_set<u64> test_c(reserved.increments.begin(), reserved.increments.end());
    if (test_a.size() + 1 >= m)
        throw capacity_error("generate_fm: no multipliers left for training after reservation");
    if (test_c.size() >= m)
        throw capacity_error("generate_fm: no increments left for training after reservation");

    const u64 n_test = static_cast<u64>(man.n_test_a) * man.n_test_c;
    std::vector<SequenceRecord> records(man.n_train + n_test);
    const u64 len = man.seq_len + u64{1};

    detail::parallel_for(man.n_train, threads, [&](u64 i) {
        SamplerState rng = root.fork(detail::dom_fm_train, i);
        SequenceRecord& rec = records[i];
        rec.idx = i;
        rec.m = m;
        rec.a = detail::draw_excluding(rng, 1, m, test_a);
        rec.c = detail::draw_excluding(rng, 0, m, test_c);
        rec.x0 = rng.below(m);
        rec.split = SequenceRecord::Split::train;
        const LcgParams params(m, rec.a, rec.c);
        rec.values = lcg_sequence(rec.x0, params, len);
        rec.period_class = classify_period(params, rec.x0, man.seq_len);
    });

    detail::parallel_for(n_test, threads, [&](u64 i) {
        SamplerState rng = root.fork(detail::dom_fm_test_x0, i);
        SequenceRecord& rec = records[man.n_train + i];
        rec.idx = man.n_train + i;
        rec.m = m;
        rec.a = reserved.multipliers[i / man.n_test_c];
        rec.c = reserved.increments[i % man.n_test_c];
        rec.x0 = rng.below(m);
        rec.split = SequenceRecord::Split::test;
        const LcgParams params(m, rec.a, rec.c);
        rec.values = lcg_sequence(rec.x0, params, len);
        rec.period_class = classify_period(params, rec.x0, man.seq_len);
    });
    return records;
}

/// Unseen-moduli corpus. Train records grouped by modulus (idx follows
/// modulus-major, then a, then c), then per test modulus the reserved
/// grid. The manifest's excluded_a/excluded_c are filled by this call.
[[nodiscard]] inline std::vector<SequenceRecord> generate_um(DatasetManifest& man,
                                                             unsigned threads = 1) {
    if (man.task != DatasetManifest::Task::um)
        throw std::invalid_argument("generate_um: manifest task is not um");
    if (man.m_test.empty()) throw std::invalid_argument("generate_um: M_test is empty");
    if (man.seq_len == 0) throw std::invalid_argument("generate_um: manifest needs L >= 1");
    if (man.n_m == 0 || man.n_a == 0 || man.n_c == 0)
        throw std::invalid_argument("generate_um: sizes n_m, n_a, n_c must be set (plan_um_sizes)");

    u64 max_test = 0;
    for (u64 mt : man.m_test) max_test = std::max(max_test, mt);
    man.m_max = 12 * max_test / 10;  // floor(1.2 * max), integer-only
    const u64 lo = std::max<u64>(2, man.seq_len);
    if (man.m_max < lo)
        throw capacity_error("generate_um: modulus range [" + std::to_string(lo) + ", " +
                             std::to_string(man.m_max) + "] is empty");

    const std::unordered_set<u64> test_m(man.m_test.begin(), man.m_test.end());
    u64 in_range_excluded = 0;
    for (u64 mt : man.m_test)
        if (mt >= lo && mt <= man.m_max) ++in_range_excluded;
    const u64 range_size = man.m_max - lo + 1 - in_range_excluded;
    if (range_size < man.n_m)
        throw capacity_error("generate_um: only " + std::to_string(range_size) +
                             " candidate moduli for n_m=" + std::to_string(man.n_m));

    const SamplerState root(man.seed);

    // Reserved full-period grids, one per test modulus; train exclusion
    // is by value, union across test moduli. Small moduli may admit
    // fewer than the requested count of full-period multipliers (they
    // form the progression 1 + j*K), so the per-modulus grid is clamped
    // to what exists instead of failing the whole corpus.
    std::vector<FullPeriodParams> reserved(man.m_test.size());
    std::unordered_set<u64> excl_a, excl_c;
    man.excluded_a.clear();
    man.excluded_c.clear();
    man.um_test_grids.clear();
    for (std::size_t j = 0; j < man.m_test.size(); ++j) {
        const u64 mt = man.m_test[j];
        const Factorization f = factorize(mt);
        const u64 avail_a = (mt - 2) / hull_dobell_stride(mt, radical(f)) + 1;
        const u64 avail_c = totient(f);
        const u32 take_a = static_cast<u32>(std::min<u64>(man.n_test_a, avail_a));
        const u32 take_c = static_cast<u32>(std::min<u64>(man.n_test_c, avail_c));
        reserved[j] = enumerate_full_period_params(
            mt, take_a, take_c, root.fork(detail::dom_um_test_params, j).seed_tag());
        man.um_test_grids.push_back({take_a, take_c});
        for (u64 v : reserved[j].multipliers)
            if (excl_a.insert(v).second) man.excluded_a.push_back(v);
        for (u64 v : reserved[j].increments)
            if (excl_c.insert(v).second) man.excluded_c.push_back(v);
    }

    // Train moduli, distinct, skipping the test list.
    std::vector<u64> moduli;
    {
        SamplerState rng = root.fork(detail::dom_um_moduli, 0);
        const u64 span = man.m_max - lo + 1;
        if (span <= (u64{1} << 22) || man.n_m * 2 >= range_size) {
            std::vector<u64> pool;
            pool.reserve(range_size);
            for (u64 v = lo; v <= man.m_max; ++v)
                if (!test_m.contains(v)) pool.push_back(v);
            for (u64 i = 0; i < man.n_m; ++i) {
                const u64 j = i + rng.below(pool.size() - i);
                std::swap(pool[i], pool[j]);
                moduli.push_back(pool[i]);
            }
        } else {
            std::unordered_set<u64> seen;
            while (moduli.size() < man.n_m) {
                const u64 v = rng.in_range(lo, man.m_max);
                if (!test_m.contains(v) && seen.insert(v).second) moduli.push_back(v);
            }
        }
    }

    // Per-modulus parameter grids.
    struct Grid {
        std::vector<u64> as, cs;
    };
    std::vector<Grid> grids(moduli.size());
    detail::parallel_for(moduli.size(), threads, [&](u64 i) {
        const u64 m = moduli[i];
        u64 excluded_here = 0;
        for (u64 v : excl_a)
            if (v > 0 && v < m) ++excluded_here;
        if (m - 1 - excluded_here < man.n_a)
            throw capacity_error("generate_um: modulus " + std::to_string(m) +
                                 " cannot supply n_a multipliers");
        excluded_here = 0;
        for (u64 v : excl_c)
            if (v < m) ++excluded_here;
        if (m - excluded_here < man.n_c)
            throw capacity_error("generate_um: modulus " + std::to_string(m) +
                                 " cannot supply n_c increments");
        SamplerState rng = root.fork(detail::dom_um_params, i);
        Grid& g = grids[i];
        std::unordered_set<u64> taken;
        while (g.as.size() < man.n_a) {
            const u64 v = detail::draw_excluding(rng, 1, m, excl_a);
            if (taken.insert(v).second) g.as.push_back(v);
        }
        taken.clear();
        while (g.cs.size() < man.n_c) {
            const u64 v = detail::draw_excluding(rng, 0, m, excl_c);
            if (taken.insert(v).second) g.cs.push_back(v);
        }
    });

    const u64 n_train = man.n_m * man.n_a * man.n_c;
    std::vector<u64> test_offset(man.m_test.size() + 1, 0);
    for (std::size_t j = 0; j < man.m_test.size(); ++j)
        test_offset[j + 1] = test_offset[j] + static_cast<u64>(man.um_test_grids[j][0]) *
                                                  man.um_test_grids[j][1];
    const u64 n_test = test_offset.back();
    std::vector<SequenceRecord> records(n_train + n_test);
    const u64 len = man.seq_len + u64{1};
    man.n_train = n_train;

    detail::parallel_for(n_train, threads, [&](u64 i) {
        const u64 mi = i / (man.n_a * man.n_c);
        const u64 rest = i % (man.n_a * man.n_c);
        SequenceRecord& rec = records[i];
        rec.idx = i;
        rec.m = moduli[mi];
        rec.a = grids[mi].as[rest / man.n_c];
        rec.c = grids[mi].cs[rest % man.n_c];
        SamplerState rng = root.fork(detail::dom_um_train_x0, i);
        rec.x0 = rng.below(rec.m);
        rec.split = SequenceRecord::Split::train;
        const LcgParams params(rec.m, rec.a, rec.c);
        rec.values = lcg_sequence(rec.x0, params, len);
        rec.period_class = classify_period(params, rec.x0, man.seq_len);
    });

    detail::parallel_for(man.m_test.size(), threads, [&](u64 j) {
        const u64 take_c = man.um_test_grids[j][1];
        for (u64 i = test_offset[j]; i < test_offset[j + 1]; ++i) {
            const u64 g = i - test_offset[j];  // grid cell
            SequenceRecord& rec = records[n_train + i];
            rec.idx = n_train + i;
            rec.m = man.m_test[j];
            rec.a = reserved[j].multipliers[g / take_c];
            rec.c = reserved[j].increments[g % take_c];
            SamplerState rng = root.fork(detail::dom_um_test_x0, i);
            rec.x0 = rng.below(rec.m);
            rec.split = SequenceRecord::Split::test;
            const LcgParams params(rec.m, rec.a, rec.c);
            rec.values = lcg_sequence(rec.x0, params, len);
            rec.period_class = classify_period(params, rec.x0, man.seq_len);
        }
    });
    return records;
}

// ------------------------------------------------------------------
// Storage
// ------------------------------------------------------------------

namespace detail {

constexpr u64 fnv_offset = 14695981039346656037ull;
constexpr u64 fnv_prime = 1099511628211ull;

struct Fnv1a64 {
    u64 state = fnv_offset;
    void feed(const unsigned char* data, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) {
            state ^= data[i];
            state *= fnv_prime;
        }
    }
    [[nodiscard]] u64 digest() const { return state; }
};

inline void put_le(std::string& buf, u64 v, unsigned bytes) {
    for (unsigned i = 0; i < bytes; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

[[nodiscard]] inline u64 get_le(const std::string& buf, std::size_t& pos, unsigned bytes) {
    if (pos + bytes > buf.size()) throw format_error("token file truncated in header");
    u64 v = 0;
    for (unsigned i = 0; i < bytes; ++i)
        v |= static_cast<u64>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += bytes;
    return v;
}

[[nodiscard]] inline std::string task_name(DatasetManifest::Task t) {
    return t == DatasetManifest::Task::fm ? "fm" : "um";
}

[[nodiscard]] inline std::string split_name(SequenceRecord::Split s) {
    return s == SequenceRecord::Split::train ? "train" : "test";
}

[[nodiscard]] inline std::string period_name(SequenceRecord::PeriodClass p) {
    return p == SequenceRecord::PeriodClass::short_period ? "short" : "long";
}

}  // namespace detail

/// Serialize a corpus into `dir` (manifest.json, records.jsonl,
/// tokens.bin). Returns the FNV-1a digest of the token payload, which
/// is also recorded in the manifest. Storage requires complete
/// integers, so specs with drop_last_token are rejected; token ids
/// above two bytes (unique mode past 65536) don't fit the format.
inline u64 write_corpus(const std::vector<SequenceRecord>& records,
                        const TokenizerSpec& tok, const DatasetManifest& man,
                        const std::filesystem::path& dir) {
    if (tok.drop_last_token)
        throw format_error("write_corpus: corpus storage needs whole integers "
                           "(drop_last_token is for exported training streams)");
    if (tok.vocab_size() > 65536)
        throw format_error("write_corpus: vocabulary " + std::to_string(tok.vocab_size()) +
                           " exceeds the 2-byte token format");
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw io_error("write_corpus: cannot create " + dir.string());

    const unsigned width = tok.vocab_size() <= 256 ? 1 : 2;
    const u64 len = records.empty() ? 0 : records.front().values.size();

    std::string payload;
    payload.reserve(records.size() * len *
                    (tok.mode == TokenizerSpec::Mode::base_b ? tok.digits_per_int : 1) * width);
    for (const auto& rec : records) {
        if (rec.values.size() != len)
            throw format_error("write_corpus: ragged record lengths at idx " +
                               std::to_string(rec.idx));
        const TokenStream ts = tokenize_sequence(rec.values, tok);
        for (u64 t : ts.tokens) detail::put_le(payload, t, width);
    }

    detail::Fnv1a64 fnv;
    fnv.feed(reinterpret_cast<const unsigned char*>(payload.data()), payload.size());
    const u64 digest = fnv.digest();

    std::string header;
    header += "LCGT";
    detail::put_le(header, man.format_version, 2);
    u64 flags = 0;
    if (tok.mode == TokenizerSpec::Mode::base_b) flags |= 1;
    if (tok.drop_last_token) flags |= 2;
    detail::put_le(header, flags, 2);
    detail::put_le(header, tok.base, 4);
    detail::put_le(header, tok.mode == TokenizerSpec::Mode::base_b ? tok.digits_per_int : 1, 2);
    detail::put_le(header, len, 4);
    detail::put_le(header, records.size(), 8);

    {
        std::ofstream f(dir / "tokens.bin", std::ios::binary | std::ios::trunc);
        if (!f) throw io_error("write_corpus: cannot open tokens.bin");
        f.write(header.data(), static_cast<std::streamsize>(header.size()));
        f.write(payload.data(), static_cast<std::streamsize>(payload.size()));
        if (!f) throw io_error("write_corpus: short write to tokens.bin");
    }

    {
        std::ofstream f(dir / "records.jsonl", std::ios::trunc);
        if (!f) throw io_error("write_corpus: cannot open records.jsonl");
        for (const auto& rec : records) {
            f << "{\"idx\":" << rec.idx << ",\"m\":" << rec.m << ",\"a\":" << rec.a
              << ",\"c\":" << rec.c << ",\"x0\":" << rec.x0 << ",\"split\":\""
              << detail::split_name(rec.split) << "\",\"period_class\":\""
              << detail::period_name(rec.period_class) << "\"}\n";
        }
        if (!f) throw io_error("write_corpus: short write to records.jsonl");
    }

    nlohmann::ordered_json j;
    j["format_version"] = man.format_version;
    j["task"] = detail::task_name(man.task);
    j["seed"] = man.seed;
    j["L"] = man.seq_len;
    j["n_train"] = man.n_train;
    if (man.task == DatasetManifest::Task::fm) {
        j["m"] = man.m;
        j["draw_policy"] = "uniform-pairs-independent-x0";
    } else {
        j["m_test"] = man.m_test;
        j["m_max"] = man.m_max;
        j["n_m"] = man.n_m;
        j["n_a"] = man.n_a;
        j["n_c"] = man.n_c;
        j["test_grids"] = man.um_test_grids;
    }
    j["n_test_a"] = man.n_test_a;
    j["n_test_c"] = man.n_test_c;
    j["excluded_a"] = man.excluded_a;
    j["excluded_c"] = man.excluded_c;
    j["excluded_m"] = man.m_test;
    j["tokenizer"] = {
        {"mode", tok.mode == TokenizerSpec::Mode::base_b ? "base_b" : "unique"},
        {"base", tok.base},
        {"digits_per_int", tok.digits_per_int},
        {"drop_last_token", tok.drop_last_token},
    };
    char hex[19];
    std::snprintf(hex, sizeof hex, "0x%016llx", static_cast<unsigned long long>(digest));
    j["digest"] = hex;

    std::ofstream f(dir / "manifest.json", std::ios::trunc);
    if (!f) throw io_error("write_corpus: cannot open manifest.json");
    f << j.dump(2) << "\n";
    if (!f) throw io_error("write_corpus: short write to manifest.json");
    return digest;
}

struct Corpus {
    DatasetManifest manifest;
    TokenizerSpec tokenizer;
    u64 digest = 0;
    std::vector<SequenceRecord> records;
};

/// Inverse of write_corpus: validates the header, record counts, and
/// the token digest, and reconstructs record values from the tokens.
[[nodiscard]] inline Corpus read_corpus(const std::filesystem::path& dir) {
    auto slurp = [](const std::filesystem::path& p) {
        std::ifstream f(p, std::ios::binary);
        if (!f) throw io_error("read_corpus: cannot open " + p.string());
        std::string s((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
        return s;
    };

    Corpus out;
    {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(slurp(dir / "manifest.json"));
        } catch (const nlohmann::json::parse_error& e) {
            throw format_error("read_corpus: manifest.json is not valid JSON: " +
                               std::string(e.what()));
        }
        DatasetManifest& man = out.manifest;
        man.format_version = j.at("format_version").get<u32>();
        if (man.format_version != 1)
            throw format_error("read_corpus: unsupported format version " +
                               std::to_string(man.format_version));
        const std::string task = j.at("task").get<std::string>();
        man.task = task == "fm" ? DatasetManifest::Task::fm : DatasetManifest::Task::um;
        man.seed = j.at("seed").get<u64>();
        man.seq_len = j.at("L").get<u32>();
        man.n_train = j.at("n_train").get<u64>();
        if (man.task == DatasetManifest::Task::fm) {
            man.m = j.at("m").get<u64>();
        } else {
            man.m_test = j.at("m_test").get<std::vector<u64>>();
            man.m_max = j.at("m_max").get<u64>();
            man.n_m = j.at("n_m").get<u64>();
            man.n_a = j.at("n_a").get<u64>();
            man.n_c = j.at("n_c").get<u64>();
            man.um_test_grids = j.at("test_grids").get<std::vector<std::array<u32, 2>>>();
        }
        man.n_test_a = j.at("n_test_a").get<u32>();
        man.n_test_c = j.at("n_test_c").get<u32>();
        man.excluded_a = j.at("excluded_a").get<std::vector<u64>>();
        man.excluded_c = j.at("excluded_c").get<std::vector<u64>>();
        const auto& t = j.at("tokenizer");
        out.tokenizer.mode = t.at("mode").get<std::string>() == "base_b"
                                 ? TokenizerSpec::Mode::base_b
                                 : TokenizerSpec::Mode::unique;
        out.tokenizer.base = t.at("base").get<u64>();
        out.tokenizer.digits_per_int = t.at("digits_per_int").get<u32>();
        out.tokenizer.drop_last_token = t.at("drop_last_token").get<bool>();
        out.digest = std::stoull(j.at("digest").get<std::string>(), nullptr, 16);
    }

    const std::string bin = slurp(dir / "tokens.bin");
    std::size_t pos = 0;
    if (bin.size() < 4 || bin.substr(0, 4) != "LCGT")
        throw format_error("read_corpus: bad magic in tokens.bin");
    pos = 4;
    const u64 version = detail::get_le(bin, pos, 2);
    if (version != out.manifest.format_version)
        throw format_error("read_corpus: token file version " + std::to_string(version) +
                           " does not match manifest");
    const u64 flags = detail::get_le(bin, pos, 2);
    if (flags & 2)
        throw format_error("read_corpus: drop-last token streams are exports, not corpora");
    const u64 base = detail::get_le(bin, pos, 4);
    const u64 dpi = detail::get_le(bin, pos, 2);
    const u64 seq_len = detail::get_le(bin, pos, 4);
    const u64 count = detail::get_le(bin, pos, 8);
    if (((flags & 1) != 0) != (out.tokenizer.mode == TokenizerSpec::Mode::base_b) ||
        base != out.tokenizer.base || dpi != out.tokenizer.digits_per_int)
        throw format_error("read_corpus: tokenizer header disagrees with manifest");

    const unsigned width = out.tokenizer.vocab_size() <= 256 ? 1 : 2;
    const u64 tokens_per_record = seq_len * dpi;
    const u64 expect = count * tokens_per_record * width;
    if (bin.size() - pos != expect) throw format_error("read_corpus: token payload truncated");

    detail::Fnv1a64 fnv;
    fnv.feed(reinterpret_cast<const unsigned char*>(bin.data()) + pos, bin.size() - pos);
    if (fnv.digest() != out.digest)
        throw format_error("read_corpus: token digest mismatch (corpus corrupted?)");

    // Metadata lines.
    out.records.resize(count);
    {
        std::istringstream lines(slurp(dir / "records.jsonl"));
        std::string line;
        u64 i = 0;
        while (std::getline(lines, line)) {
            if (line.empty()) continue;
            if (i >= count) throw format_error("read_corpus: more metadata lines than records");
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(line);
            } catch (const nlohmann::json::parse_error&) {
                throw format_error("read_corpus: bad JSONL at line " + std::to_string(i + 1));
            }
            SequenceRecord& rec = out.records[i];
            rec.idx = j.at("idx").get<u64>();
            rec.m = j.at("m").get<u64>();
            rec.a = j.at("a").get<u64>();
            rec.c = j.at("c").get<u64>();
            rec.x0 = j.at("x0").get<u64>();
            rec.split = j.at("split").get<std::string>() == "train"
                            ? SequenceRecord::Split::train
                            : SequenceRecord::Split::test;
            rec.period_class = j.at("period_class").get<std::string>() == "short"
                                   ? SequenceRecord::PeriodClass::short_period
                                   : SequenceRecord::PeriodClass::long_period;
            ++i;
        }
        if (i != count) throw format_error("read_corpus: metadata lines missing");
    }

    // Token payload -> values.
    for (u64 r = 0; r < count; ++r) {
        TokenStream ts;
        ts.spec = out.tokenizer;
        ts.tokens.reserve(tokens_per_record);
        ts.int_positions.reserve(tokens_per_record);
        ts.digit_positions.reserve(tokens_per_record);
        for (u64 k = 0; k < tokens_per_record; ++k) {
            ts.tokens.push_back(detail::get_le(bin, pos, width));
            ts.int_positions.push_back(static_cast<u32>(k / dpi));
            ts.digit_positions.push_back(static_cast<u32>(k % dpi));
        }
        out.records[r].values = detokenize_stream(ts).values;
    }
    return out;
}

}  // namespace prnglab
