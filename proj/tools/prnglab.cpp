// prnglab — command-line front end for the LCG sequence laboratory.
//
// Subcommands: gen, tokenize, analyze, predict, eval, scaling.
//
// Conventions, kept strictly:
//   * stdout carries data (JSON or JSONL); every diagnostic goes to
//     stderr. Failures print one machine-readable JSON line on stderr.
//   * exit codes: 0 ok, 2 validation, 3 I/O, 4 internal invariant
//     breach.
//   * option precedence: command-line flags > --config JSON file >
//     built-in defaults. Whenever a run writes an output file, the
//     fully resolved parameter set is persisted beside it
//     (run_config.json in output directories, <file>.config.json next
//     to single files), and feeding that file back through --config
//     reproduces the run byte for byte.
//   * --threads (0 = all cores) is overridden by the PRNGLAB_THREADS
//     environment variable when set. Outputs never depend on the
//     thread count.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "prnglab/dataset.hpp"
#include "prnglab/eval.hpp"
#include "prnglab/lcg.hpp"
#include "prnglab/predictor.hpp"
#include "prnglab/rns.hpp"
#include "prnglab/tokenizer.hpp"

namespace {

using json = nlohmann::ordered_json;
using namespace prnglab;

constexpr int exit_ok = 0;
constexpr int exit_validation = 2;
constexpr int exit_io = 3;
constexpr int exit_internal = 4;

void emit_error(const std::string& kind, const std::string& message) {
    std::cerr << json{{"error", kind}, {"message", message}}.dump() << "\n";
}

// ------------------------------------------------------------------
// Option parsing helpers
// ------------------------------------------------------------------

// One integer token: plain decimal or "B^E" power notation.
u64 parse_m_token(const std::string& tok) {
    const auto caret = tok.find('^');
    auto to_u64 = [&](const std::string& s) {
        std::size_t used = 0;
        const u64 v = std::stoull(s, &used);
        if (used != s.size()) throw std::invalid_argument("bad integer token '" + tok + "'");
        return v;
    };
    if (caret == std::string::npos) return to_u64(tok);
    const u64 base = to_u64(tok.substr(0, caret));
    const u64 exp = to_u64(tok.substr(caret + 1));
    if (base < 2 || exp > 63) throw std::invalid_argument("bad power token '" + tok + "'");
    u64 v = 1;
    for (u64 i = 0; i < exp; ++i) {
        if (v > ~u64{0} / base) throw std::invalid_argument("power token overflows: '" + tok + "'");
        v *= base;
    }
    return v;
}

// Comma-separated tokens; "A..B" ranges walk exponents when both ends
// use the same power base ("2^8..2^16" -> 256, 512, ..., 65536) and
// step by one otherwise.
std::vector<u64> parse_m_list(const std::string& text) {
    std::vector<u64> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto comma = text.find(',', pos);
        const std::string tok =
            text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        pos = comma == std::string::npos ? text.size() + 1 : comma + 1;
        if (tok.empty()) continue;
        const auto dots = tok.find("..");
        if (dots == std::string::npos) {
            out.push_back(parse_m_token(tok));
            continue;
        }
        const std::string lo_tok = tok.substr(0, dots), hi_tok = tok.substr(dots + 2);
        const auto c1 = lo_tok.find('^'), c2 = hi_tok.find('^');
        if (c1 != std::string::npos && c2 != std::string::npos &&
            lo_tok.substr(0, c1) == hi_tok.substr(0, c2)) {
            const u64 base = parse_m_token(lo_tok.substr(0, c1));
            const u64 e1 = parse_m_token(lo_tok.substr(c1 + 1));
            const u64 e2 = parse_m_token(hi_tok.substr(c2 + 1));
            if (e1 > e2) throw std::invalid_argument("descending range '" + tok + "'");
            u64 v = 1;
            for (u64 i = 0; i < e1; ++i) v *= base;
            for (u64 e = e1; e <= e2; ++e, v *= base) out.push_back(v);
        } else {
            const u64 lo = parse_m_token(lo_tok), hi = parse_m_token(hi_tok);
            if (lo > hi) throw std::invalid_argument("descending range '" + tok + "'");
            if (hi - lo > 1'000'000) throw std::invalid_argument("range too large: '" + tok + "'");
            for (u64 v = lo; v <= hi; ++v) out.push_back(v);
        }
    }
    if (out.empty()) throw std::invalid_argument("empty modulus list");
    return out;
}

std::vector<u64> parse_u64_list(const std::string& text) {
    std::vector<u64> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto comma = text.find(',', pos);
        const std::string tok =
            text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        pos = comma == std::string::npos ? text.size() + 1 : comma + 1;
        if (!tok.empty()) out.push_back(parse_m_token(tok));
    }
    if (out.empty()) throw std::invalid_argument("empty value list");
    return out;
}

unsigned resolve_threads(unsigned flag_value) {
    if (const char* env = std::getenv("PRNGLAB_THREADS")) {
        const std::string s(env);
        std::size_t used = 0;
        unsigned long v = 0;
        try {
            v = std::stoul(s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != s.size() || v == 0)
            throw std::invalid_argument("PRNGLAB_THREADS must be a positive integer, got '" + s +
                                        "'");
        return static_cast<unsigned>(v);
    }
    if (flag_value > 0) return flag_value;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

// Fill options the user left off the command line from the --config
// JSON object, then report config keys that matched nothing.
class ConfigMerge {
  public:
    ConfigMerge(CLI::App* sub, const json& cfg) : sub_(sub), cfg_(cfg) {}

    template <typename T>
    void opt(const std::string& name, T& var) {
        known_.insert(name);
        if (sub_->count("--" + name) > 0 || !cfg_.contains(name)) return;
        const json& v = cfg_.at(name);
        try {
            if constexpr (std::is_same_v<T, std::string>) {
                var = v.is_string() ? v.get<std::string>() : v.dump();
            } else if constexpr (std::is_same_v<T, bool>) {
                var = v.is_string() ? v.get<std::string>() == "true" : v.get<bool>();
            } else if constexpr (std::is_floating_point_v<T>) {
                var = v.is_string() ? std::stod(v.get<std::string>()) : v.get<double>();
            } else {
                var = v.is_string() ? static_cast<T>(std::stoull(v.get<std::string>()))
                                    : v.get<T>();
            }
        } catch (const std::exception& e) {
            throw std::invalid_argument("config key '" + name + "': " + e.what());
        }
    }

    void finish() const {
        for (const auto& [key, value] : cfg_.items()) {
            (void)value;
            if (key.rfind("_", 0) == 0) continue;  // metadata keys
            if (!known_.contains(key) && key != "config")
                std::cerr << "note: config key '" << key << "' does not apply to this subcommand\n";
        }
    }

  private:
    CLI::App* sub_;
    const json& cfg_;
    std::set<std::string> known_;
};

void write_effective_config(const json& eff, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw io_error("cannot write effective config " + path.string());
    f << eff.dump(2) << "\n";
    if (!f) throw io_error("short write to " + path.string());
}

TokenizerSpec resolve_tokenizer(const std::string& mode, u64 base, u32 digits, bool drop_last,
                                u64 m_cap) {
    if (mode == "unique") {
        TokenizerSpec s = TokenizerSpec::unique_for(base > 0 ? base : m_cap, drop_last);
        if (s.base < m_cap)
            throw std::invalid_argument("unique tokenizer base " + std::to_string(s.base) +
                                        " cannot hold values below " + std::to_string(m_cap));
        return s;
    }
    if (mode != "base_b") throw std::invalid_argument("unknown tokenizer mode '" + mode + "'");
    TokenizerSpec s = TokenizerSpec::base_b_for(base > 0 ? base : 256, m_cap, drop_last);
    if (digits > 0) {
        // Explicit digit count must still reach m_cap.
        if (digits < s.digits_per_int)
            throw std::invalid_argument("digits=" + std::to_string(digits) +
                                        " cannot represent values below " + std::to_string(m_cap));
        s.digits_per_int = digits;
    }
    return s;
}

std::string tokenizer_mode_name(const TokenizerSpec& s) {
    return s.mode == TokenizerSpec::Mode::base_b ? "base_b" : "unique";
}

// ------------------------------------------------------------------
// gen
// ------------------------------------------------------------------

struct GenArgs {
    std::string task;
    u64 m = 0;
    std::string m_test_text;
    u64 n = 0;
    u32 len = 0;
    u64 seed = 0;
    u32 n_test_a = 64, n_test_c = 64;
    u64 n_a = 0, n_c = 0, n_m = 0;
    std::string tok_mode = "base_b";
    u64 base = 0;
    u32 digits = 0;
    std::string out;
    unsigned threads = 0;
    std::string config;
};

int run_gen(GenArgs& a, CLI::App* sub, const json& cfg) {
    ConfigMerge merge(sub, cfg);
    merge.opt("task", a.task);
    merge.opt("m", a.m);
    merge.opt("m-test", a.m_test_text);
    merge.opt("n", a.n);
    merge.opt("len", a.len);
    merge.opt("seed", a.seed);
    merge.opt("n-test-a", a.n_test_a);
    merge.opt("n-test-c", a.n_test_c);
    merge.opt("n-a", a.n_a);
    merge.opt("n-c", a.n_c);
    merge.opt("n-m", a.n_m);
    merge.opt("tok-mode", a.tok_mode);
    merge.opt("base", a.base);
    merge.opt("digits", a.digits);
    merge.opt("out", a.out);
    merge.opt("threads", a.threads);
    merge.finish();

    if (a.out.empty()) throw std::invalid_argument("gen: --out directory is required");
    if (a.len == 0) throw std::invalid_argument("gen: --len is required");
    const unsigned threads = resolve_threads(a.threads);

    DatasetManifest man;
    man.seed = a.seed;
    man.seq_len = a.len;
    man.n_test_a = a.n_test_a;
    man.n_test_c = a.n_test_c;

    u64 m_cap = 0;
    std::vector<SequenceRecord> records;
    if (a.task == "fm") {
        if (a.m < 2) throw std::invalid_argument("gen: fm requires --m >= 2");
        if (a.n == 0) throw std::invalid_argument("gen: fm requires --n");
        man.task = DatasetManifest::Task::fm;
        man.m = a.m;
        man.n_train = a.n;
        records = generate_fm(man, threads);
        m_cap = man.m;
    } else if (a.task == "um") {
        if (a.m_test_text.empty()) throw std::invalid_argument("gen: um requires --m-test");
        man.task = DatasetManifest::Task::um;
        man.m_test = parse_m_list(a.m_test_text);
        const unsigned given = (a.n_a > 0) + (a.n_c > 0) + (a.n_m > 0);
        if (given == 3) {
            man.n_a = a.n_a;
            man.n_c = a.n_c;
            man.n_m = a.n_m;
        } else if (given == 0) {
            if (a.n == 0) throw std::invalid_argument("gen: um requires --n or all of --n-a/--n-c/--n-m");
            u64 hardest = 0;
            for (u64 mt : man.m_test) hardest = std::max(hardest, mt);
            const UmPlan plan = plan_um_sizes(a.n, hardest);
            man.n_a = plan.n_a;
            man.n_c = plan.n_c;
            man.n_m = plan.n_m;
            if (plan.n_m_below_recommended)
                std::cerr << "note: n_m=" << plan.n_m << " is below the recommended m_test/4="
                          << hardest / 4 << "; coverage will be thin\n";
        } else {
            throw std::invalid_argument("gen: give all of --n-a/--n-c/--n-m or none");
        }
        records = generate_um(man, threads);
        m_cap = man.m_max;
        for (u64 mt : man.m_test) m_cap = std::max(m_cap, mt);
    } else {
        throw std::invalid_argument("gen: --task must be fm or um");
    }

    const TokenizerSpec tok = resolve_tokenizer(a.tok_mode, a.base, a.digits, false, m_cap);
    const u64 digest = write_corpus(records, tok, man, a.out);

    json eff{{"_subcommand", "gen"},
             {"task", a.task},
             {"len", a.len},
             {"seed", a.seed},
             {"n-test-a", a.n_test_a},
             {"n-test-c", a.n_test_c},
             {"tok-mode", tokenizer_mode_name(tok)},
             {"base", tok.base},
             {"digits", tok.digits_per_int},
             {"out", a.out},
             {"threads", a.threads}};
    if (man.task == DatasetManifest::Task::fm) {
        eff["m"] = man.m;
        eff["n"] = man.n_train;
    } else {
        eff["m-test"] = a.m_test_text;
        eff["n-a"] = man.n_a;
        eff["n-c"] = man.n_c;
        eff["n-m"] = man.n_m;
    }
    write_effective_config(eff, std::filesystem::path(a.out) / "run_config.json");

    char hex[19];
    std::snprintf(hex, sizeof hex, "0x%016llx", static_cast<unsigned long long>(digest));
    std::cout << json{{"dir", a.out},
                      {"task", a.task},
                      {"n_records", records.size()},
                      {"n_train", man.n_train},
                      {"digest", hex}}
                     .dump()
              << "\n";
    return exit_ok;
}

// ------------------------------------------------------------------
// tokenize
// ------------------------------------------------------------------

struct TokenizeArgs {
    std::string in, out;
    std::string tok_mode;  // default: keep the corpus spec
    u64 base = 0;
    u32 digits = 0;
    bool drop_last = false;
    unsigned threads = 0;
    std::string config;
};

int run_tokenize(TokenizeArgs& a, CLI::App* sub, const json& cfg) {
    ConfigMerge merge(sub, cfg);
    merge.opt("in", a.in);
    merge.opt("out", a.out);
    merge.opt("tok-mode", a.tok_mode);
    merge.opt("base", a.base);
    merge.opt("digits", a.digits);
    merge.opt("drop-last", a.drop_last);
    merge.finish();
    if (a.in.empty() || a.out.empty())
        throw std::invalid_argument("tokenize: --in and --out are required");

    const Corpus corpus = read_corpus(a.in);
    u64 m_cap = 2;
    for (const auto& rec : corpus.records) m_cap = std::max(m_cap, rec.m);

    TokenizerSpec spec;
    if (a.tok_mode.empty()) {
        spec = corpus.tokenizer;
        spec.drop_last_token = a.drop_last;
    } else {
        spec = resolve_tokenizer(a.tok_mode, a.base, a.digits, a.drop_last, m_cap);
    }
    if (spec.vocab_size() > 65536)
        throw std::invalid_argument("tokenize: vocabulary " + std::to_string(spec.vocab_size()) +
                                    " exceeds the 2-byte token format");

    const unsigned width = spec.vocab_size() <= 256 ? 1 : 2;
    const u64 seq_len = corpus.records.empty() ? 0 : corpus.records.front().values.size();
    std::string payload;
    u64 n_tokens = 0;
    for (const auto& rec : corpus.records) {
        const TokenStream ts = tokenize_sequence(rec.values, spec);
        n_tokens += ts.tokens.size();
        for (u64 t : ts.tokens) detail::put_le(payload, t, width);
    }
    detail::Fnv1a64 fnv;
    fnv.feed(reinterpret_cast<const unsigned char*>(payload.data()), payload.size());

    std::string header;
    header += "LCGT";
    detail::put_le(header, 1, 2);
    u64 flags = 0;
    if (spec.mode == TokenizerSpec::Mode::base_b) flags |= 1;
    if (spec.drop_last_token) flags |= 2;
    detail::put_le(header, flags, 2);
    detail::put_le(header, spec.base, 4);
    detail::put_le(header, spec.mode == TokenizerSpec::Mode::base_b ? spec.digits_per_int : 1, 2);
    detail::put_le(header, seq_len, 4);
    detail::put_le(header, corpus.records.size(), 8);

    {
        std::ofstream f(a.out, std::ios::binary | std::ios::trunc);
        if (!f) throw io_error("tokenize: cannot open " + a.out);
        f.write(header.data(), static_cast<std::streamsize>(header.size()));
        f.write(payload.data(), static_cast<std::streamsize>(payload.size()));
        if (!f) throw io_error("tokenize: short write to " + a.out);
    }
    {
        json sidecar{{"mode", tokenizer_mode_name(spec)},
                     {"base", spec.base},
                     {"digits_per_int", spec.digits_per_int},
                     {"drop_last_token", spec.drop_last_token},
                     {"vocab_size", spec.vocab_size()}};
        std::ofstream f(a.out + ".spec.json", std::ios::trunc);
        if (!f) throw io_error("tokenize: cannot open " + a.out + ".spec.json");
        f << sidecar.dump(2) << "\n";
    }
    write_effective_config(json{{"_subcommand", "tokenize"},
                                {"in", a.in},
                                {"out", a.out},
                                {"tok-mode", tokenizer_mode_name(spec)},
                                {"base", spec.base},
                                {"digits", spec.digits_per_int},
                                {"drop-last", spec.drop_last_token}},
                           a.out + ".config.json");

    char hex[19];
    std::snprintf(hex, sizeof hex, "0x%016llx", static_cast<unsigned long long>(fnv.digest()));
    std::cout << json{{"out", a.out},
                      {"records", corpus.records.size()},
                      {"tokens", n_tokens},
                      {"digest", hex}}
                     .dump()
              << "\n";
    return exit_ok;
}

// ------------------------------------------------------------------
// analyze
// ------------------------------------------------------------------

struct AnalyzeArgs {
    u64 m = 0, a = 0, c = 0, x0 = 0;
    u64 stride = 1;
    u64 len = 0;  // 0: auto
    std::string out;
    std::string config;
};

int run_analyze(AnalyzeArgs& a, CLI::App* sub, const json& cfg) {
    ConfigMerge merge(sub, cfg);
    merge.opt("m", a.m);
    merge.opt("a", a.a);
    merge.opt("c", a.c);
    merge.opt("x0", a.x0);
    merge.opt("stride", a.stride);
    merge.opt("len", a.len);
    merge.opt("out", a.out);
    merge.finish();
    if (a.m < 2) throw std::invalid_argument("analyze: --m >= 2 is required");
    if (a.stride == 0) throw std::invalid_argument("analyze: --stride must be >= 1");

    const LcgParams params(a.m, a.a, a.c);
    const bool hd = hull_dobell(a.m, a.a, a.c);
    const Factorization factors = factorize(a.m);

    // Enough raw values that the largest digit period fits twice into
    // the strided stream, capped to keep memory sane; digits whose
    // period cannot be confirmed inside the cap are reported
    // unresolved rather than guessed.
    u64 max_pk = 1;
    for (const auto& pp : factors) max_pk = std::max(max_pk, pp.value);
    u64 len = a.len;
    if (len == 0) {
        const u64 want = 2 * max_pk * a.stride + a.stride + 1;
        len = std::min<u64>(want, u64{1} << 22);
    }
    const std::vector<u64> values = lcg_sequence(a.x0, params, len);
    std::vector<u64> strided;
    strided.reserve(values.size() / a.stride + 1);
    for (std::size_t i = 0; i < values.size(); i += a.stride) strided.push_back(values[i]);

    json report{{"m", a.m},      {"a", a.a},
                {"c", a.c},      {"x0", a.x0},
                {"stride", a.stride}, {"hull_dobell", hd},
                {"theory_applies", hd}};
    if (a.m <= (u64{1} << 24))
        report["sequence_period"] = period(params, a.x0);
    else
        report["sequence_period"] = nullptr;

    bool any_mismatch = false;
    report["factors"] = json::array();
    for (const auto& pp : factors) {
        json frow{{"prime", pp.prime}, {"exponent", pp.exponent}, {"digits", json::array()}};
        for (u32 k = 1; k <= pp.exponent; ++k) {
            const u64 theory = reduced_digit_period(pp.prime, k, a.stride);
            const auto measured = measure_digit_period(strided, pp.prime, k);
            json drow{{"k", k}, {"theory", theory}};
            if (measured) {
                drow["measured"] = *measured;
                drow["match"] = *measured == theory;
                if (*measured != theory) any_mismatch = true;
            } else {
                drow["measured"] = nullptr;
                drow["match"] = nullptr;
            }
            frow["digits"].push_back(std::move(drow));
        }
        report["factors"].push_back(std::move(frow));
    }
    report["mismatch"] = any_mismatch;
    if (any_mismatch && !hd)
        report["note"] = "parameters are not full-period; digit-period theory does not apply";

    if (!a.out.empty()) {
        std::ofstream f(a.out, std::ios::trunc);
        if (!f) throw io_error("analyze: cannot open " + a.out);
        f << report.dump(2) << "\n";
        write_effective_config(json{{"_subcommand", "analyze"},
                                    {"m", a.m},
                                    {"a", a.a},
                                    {"c", a.c},
                                    {"x0", a.x0},
                                    {"stride", a.stride},
                                    {"len", len},
                                    {"out", a.out}},
                               a.out + ".config.json");
    }
    std::cout << report.dump() << "\n";
    return exit_ok;
}

// ------------------------------------------------------------------
// predict
// ------------------------------------------------------------------

struct PredictArgs {
    std::string mode;  // copy | full | unseen | crack-m | crack-unknown
    std::string ctx_text;
    u64 m = 0;
    std::string in;  // corpus dir
    std::string split = "test";
    u64 m_filter = 0;
    u32 from_t = 1, max_t = 0;
    bool no_refine = false;
    std::string out;
    std::string config;
};

json residue_class_json(const ResidueClass& rc, u64 rep) {
    return json{{"residue", rc.residue}, {"modulus", rc.modulus}, {"representative", rep}};
}

json outcome_json(const PredictionOutcome& o) {
    json factors = json::array();
    for (const auto& f : o.factors) {
        std::string tags;
        for (DigitTag t : f.digit_tags)
            tags += t == DigitTag::copied ? 'c' : t == DigitTag::solved ? 's' : 'g';
        factors.push_back(json{{"prime", f.prime},
                               {"exponent", f.exponent},
                               {"residue", f.residue},
                               {"digit_tags", tags}});
    }
    return json{{"pred", o.predicted}, {"m_estimate", o.m_estimate}, {"factors", factors}};
}

int run_predict(PredictArgs& a, CLI::App* sub, const json& cfg) {
    ConfigMerge merge(sub, cfg);
    merge.opt("mode", a.mode);
    merge.opt("ctx", a.ctx_text);
    merge.opt("m", a.m);
    merge.opt("in", a.in);
    merge.opt("split", a.split);
    merge.opt("m-filter", a.m_filter);
    merge.opt("from-t", a.from_t);
    merge.opt("max-t", a.max_t);
    merge.opt("no-refine", a.no_refine);
    merge.opt("out", a.out);
    merge.finish();

    const bool inline_mode = !a.ctx_text.empty();
    const bool corpus_mode = !a.in.empty();
    if (inline_mode == corpus_mode)
        throw std::invalid_argument("predict: give exactly one of --ctx or --in");

    if (inline_mode) {
        const std::vector<u64> ctx = parse_u64_list(a.ctx_text);
        json result{{"mode", a.mode}};
        if (a.mode == "copy" || a.mode == "full") {
            if (a.m < 2) throw std::invalid_argument("predict: --m is required for mode " + a.mode);
            const PredictionOutcome o =
                a.mode == "copy" ? predict_copy_only(ctx, a.m) : predict_full(ctx, a.m);
            result["m"] = a.m;
            result["t"] = ctx.size();
            result.update(outcome_json(o));
        } else if (a.mode == "unseen") {
            const PredictionOutcome o = predict_unseen(ctx, !a.no_refine);
            result["t"] = ctx.size();
            result.update(outcome_json(o));
        } else if (a.mode == "crack-m") {
            if (a.m < 2) throw std::invalid_argument("predict: --m is required for mode crack-m");
            const CrackResult r = crack_known_m(ctx, a.m);
            result["m"] = a.m;
            result["a"] = residue_class_json(r.a_class, r.a_rep);
            result["c"] = residue_class_json(r.c_class, r.c_rep);
            result["elements_consumed"] = r.elements_consumed;
            result["unique"] = r.a_class.pinned(a.m) && r.c_class.pinned(a.m);
        } else if (a.mode == "crack-unknown") {
            const CrackResult r = crack_unknown_m(ctx);
            if (r.modulus) {
                result["m"] = *r.modulus;
                result["a"] = residue_class_json(r.a_class, r.a_rep);
                result["c"] = residue_class_json(r.c_class, r.c_rep);
            } else {
                result["m"] = nullptr;
                result["note"] = "context admits no single modulus (all determinants vanish)";
            }
            result["elements_consumed"] = r.elements_consumed;
        } else {
            throw std::invalid_argument("predict: unknown mode '" + a.mode + "'");
        }
        std::cout << result.dump() << "\n";
        return exit_ok;
    }

    // Corpus mode: emit a prediction dump.
    if (a.mode != "copy" && a.mode != "full" && a.mode != "unseen")
        throw std::invalid_argument("predict: corpus mode supports copy|full|unseen (crack modes "
                                    "take --ctx)");
    const Corpus corpus = read_corpus(a.in);
    std::vector<const SequenceRecord*> picked;
    std::set<u64> moduli_seen;
    for (const auto& rec : corpus.records) {
        if (a.split != "all") {
            const bool want_test = a.split == "test";
            if ((rec.split == SequenceRecord::Split::test) != want_test) continue;
        }
        if (a.m_filter > 0 && rec.m != a.m_filter) continue;
        picked.push_back(&rec);
        moduli_seen.insert(rec.m);
    }
    if (picked.empty()) throw std::invalid_argument("predict: no records match the filters");
    if (moduli_seen.size() > 1)
        std::cerr << "note: dump mixes " << moduli_seen.size()
                  << " moduli; score per modulus with eval --m and predict --m-filter\n";

    std::vector<PredictionEntry> entries;
    for (const SequenceRecord* rec : picked) {
        const u32 last = rec->values.size() - 1;
        const u32 hi = a.max_t == 0 ? last : std::min(a.max_t, last);
        std::vector<u64> ctx;
        ctx.reserve(hi);
        for (u32 t = 1; t <= hi; ++t) {
            ctx.push_back(rec->values[t - 1]);
            if (t < a.from_t) continue;
            PredictionOutcome o;
            if (a.mode == "copy")
                o = predict_copy_only(ctx, rec->m);
            else if (a.mode == "full")
                o = predict_full(ctx, rec->m);
            else
                o = predict_unseen(ctx, !a.no_refine);
            entries.push_back({rec->idx, t, rec->values[t], o.predicted});
        }
    }

    if (a.out.empty()) {
        write_dump(entries, std::cout);
    } else {
        write_dump(entries, std::filesystem::path(a.out));
        write_effective_config(json{{"_subcommand", "predict"},
                                    {"mode", a.mode},
                                    {"in", a.in},
                                    {"split", a.split},
                                    {"m-filter", a.m_filter},
                                    {"from-t", a.from_t},
                                    {"max-t", a.max_t},
                                    {"no-refine", a.no_refine},
                                    {"out", a.out}},
                               a.out + ".config.json");
        std::cerr << "wrote " << entries.size() << " predictions to " << a.out << "\n";
    }
    return exit_ok;
}

// ------------------------------------------------------------------
// eval
// ------------------------------------------------------------------

struct EvalArgs {
    std::string dump;
    u64 m = 0;
    double threshold = 0.0;  // 0: skip crossing report
    std::string csv;
    std::string out;
    std::string config;
};

int run_eval(EvalArgs& a, CLI::App* sub, const json& cfg) {
    ConfigMerge merge(sub, cfg);
    merge.opt("dump", a.dump);
    merge.opt("m", a.m);
    merge.opt("threshold", a.threshold);
    merge.opt("csv", a.csv);
    merge.opt("out", a.out);
    merge.finish();
    if (a.dump.empty()) throw std::invalid_argument("eval: --dump is required");
    if (a.m < 2) throw std::invalid_argument("eval: --m >= 2 is required");

    const std::vector<PredictionEntry> entries = read_dump(std::filesystem::path(a.dump));
    if (entries.empty()) throw std::invalid_argument("eval: dump is empty");
    const AccuracyReport rep = score_predictions(entries, a.m);
    json out = report_to_json(rep);
    if (a.threshold > 0.0) {
        const auto crossing = context_to_threshold(rep.per_position, a.threshold);
        out["threshold"] = a.threshold;
        out["context_to_threshold"] = crossing ? json(*crossing) : json(nullptr);
    }

    if (!a.csv.empty()) {
        std::ofstream f(a.csv, std::ios::trunc);
        if (!f) throw io_error("eval: cannot open " + a.csv);
        f << report_to_csv(rep);
    }
    if (!a.out.empty()) {
        std::ofstream f(a.out, std::ios::trunc);
        if (!f) throw io_error("eval: cannot open " + a.out);
        f << out.dump(2) << "\n";
        write_effective_config(json{{"_subcommand", "eval"},
                                    {"dump", a.dump},
                                    {"m", a.m},
                                    {"threshold", a.threshold},
                                    {"csv", a.csv},
                                    {"out", a.out}},
                               a.out + ".config.json");
    }
    std::cout << out.dump() << "\n";
    return exit_ok;
}

// ------------------------------------------------------------------
// scaling
// ------------------------------------------------------------------

struct ScalingArgs {
    std::string m_list_text;
    std::string points_file;
    std::string mode = "full";
    double threshold = 1.0;
    u32 len = 256;
    u32 n_params = 8, n_seeds = 8;
    u64 seed = 1234;
    std::string out;
    std::string config;
};

std::vector<ScalingPoint> load_points_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw io_error("scaling: cannot open " + path);
    std::vector<ScalingPoint> points;
    std::string line;
    u64 lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw format_error("scaling: line " + std::to_string(lineno) + " is not 'm,context'");
        const std::string first = line.substr(0, comma);
        if (lineno == 1 && first.find_first_not_of("0123456789^ \t") != std::string::npos)
            continue;  // header row
        try {
            points.push_back(
                {parse_m_token(first), std::stod(line.substr(comma + 1))});
        } catch (const std::exception&) {
            throw format_error("scaling: bad number at line " + std::to_string(lineno));
        }
    }
    return points;
}

int run_scaling(ScalingArgs& a, CLI::App* sub, const json& cfg) {
    ConfigMerge merge(sub, cfg);
    merge.opt("m-list", a.m_list_text);
    merge.opt("points", a.points_file);
    merge.opt("mode", a.mode);
    merge.opt("threshold", a.threshold);
    merge.opt("len", a.len);
    merge.opt("n-params", a.n_params);
    merge.opt("n-seeds", a.n_seeds);
    merge.opt("seed", a.seed);
    merge.opt("out", a.out);
    merge.finish();
    if (a.m_list_text.empty() == a.points_file.empty())
        throw std::invalid_argument("scaling: give exactly one of --m-list or --points");

    std::vector<ScalingPoint> points;
    std::vector<u64> skipped;
    if (!a.points_file.empty()) {
        points = load_points_csv(a.points_file);
    } else {
        if (a.mode != "copy" && a.mode != "full" && a.mode != "unseen")
            throw std::invalid_argument("scaling: --mode must be copy, full, or unseen");
        const std::vector<u64> moduli = parse_m_list(a.m_list_text);
        const SamplerState root(a.seed);
        for (std::size_t mi = 0; mi < moduli.size(); ++mi) {
            const u64 m = moduli[mi];
            const Factorization f = factorize(m);
            const u64 avail_a = (m - 2) / hull_dobell_stride(m, radical(f)) + 1;
            const u64 avail_c = totient(f);
            const u32 take = static_cast<u32>(
                std::min<u64>(a.n_params, std::min(avail_a, avail_c)));
            const auto fp = enumerate_full_period_params(m, take, take,
                                                         root.fork(0x70, mi).seed_tag());
            std::vector<u64> correct(a.len, 0);
            u64 samples = 0;
            for (u32 pi = 0; pi < take; ++pi) {
                const LcgParams params(m, fp.multipliers[pi], fp.increments[pi]);
                SamplerState seeds = root.fork(0x78, mi * a.n_params + pi);
                for (u32 si = 0; si < a.n_seeds; ++si) {
                    const u64 x0 = seeds.below(m);
                    const std::vector<u64> values = lcg_sequence(x0, params, a.len + u64{1});
                    ++samples;
                    std::vector<u64> ctx;
                    ctx.reserve(a.len);
                    for (u32 t = 1; t <= a.len; ++t) {
                        ctx.push_back(values[t - 1]);
                        PredictionOutcome o;
                        if (a.mode == "copy")
                            o = predict_copy_only(ctx, m);
                        else if (a.mode == "full")
                            o = predict_full(ctx, m);
                        else
                            o = predict_unseen(ctx);
                        if (o.predicted == values[t]) ++correct[t - 1];
                    }
                }
            }
            std::vector<PositionAccuracy> curve(a.len);
            for (u32 t = 0; t < a.len; ++t) curve[t] = {t + 1, samples, correct[t]};
            const auto crossing = context_to_threshold(curve, a.threshold);
            if (crossing)
                points.push_back({m, static_cast<double>(*crossing)});
            else {
                skipped.push_back(m);
                std::cerr << "note: m=" << m << " never sustained accuracy >= " << a.threshold
                          << " within len=" << a.len << "; point skipped\n";
            }
        }
    }

    const ScalingFit fit = fit_power_law(points, a.threshold);
    json out = fit_to_json(fit);
    out["skipped_m"] = skipped;
    if (!a.out.empty()) {
        std::ofstream f(a.out, std::ios::trunc);
        if (!f) throw io_error("scaling: cannot open " + a.out);
        f << out.dump(2) << "\n";
        write_effective_config(json{{"_subcommand", "scaling"},
                                    {"m-list", a.m_list_text},
                                    {"points", a.points_file},
                                    {"mode", a.mode},
                                    {"threshold", a.threshold},
                                    {"len", a.len},
                                    {"n-params", a.n_params},
                                    {"n-seeds", a.n_seeds},
                                    {"seed", a.seed},
                                    {"out", a.out}},
                               a.out + ".config.json");
    }
    std::cout << out.dump() << "\n";
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    // The config file is found by prescanning so its values can be
    // merged after parsing without fighting the parser about required
    // flags.
    std::string config_path;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--config" && i + 1 < argc)
            config_path = argv[i + 1];
        else if (arg.rfind("--config=", 0) == 0)
            config_path = arg.substr(9);
    }
    json cfg = json::object();
    if (!config_path.empty()) {
        std::ifstream f(config_path);
        if (!f) {
            emit_error("io", "cannot open config file " + config_path);
            return exit_io;
        }
        try {
            cfg = json::parse(f);
            if (!cfg.is_object()) throw std::invalid_argument("config root must be a JSON object");
        } catch (const std::exception& e) {
            emit_error("validation", std::string("config file: ") + e.what());
            return exit_validation;
        }
    }

    CLI::App app{"LCG sequence laboratory: corpus generation, tokenization, digit-period "
                 "analysis, sequence prediction, and accuracy evaluation"};
    app.require_subcommand(1);

    GenArgs gen;
    CLI::App* sub_gen = app.add_subcommand("gen", "Generate a train/test corpus");
    sub_gen->add_option("--task", gen.task, "fm (fixed modulus) or um (unseen moduli)");
    sub_gen->add_option("--m", gen.m, "modulus (fm)");
    sub_gen->add_option("--m-test", gen.m_test_text, "comma list of test moduli (um)");
    sub_gen->add_option("--n", gen.n, "target number of training records");
    sub_gen->add_option("--len", gen.len, "context length L (records carry L+1 values)");
    sub_gen->add_option("--seed", gen.seed, "master seed");
    sub_gen->add_option("--n-test-a", gen.n_test_a, "reserved test multipliers (default 64)");
    sub_gen->add_option("--n-test-c", gen.n_test_c, "reserved test increments (default 64)");
    sub_gen->add_option("--n-a", gen.n_a, "um: multipliers per modulus (with --n-c/--n-m)");
    sub_gen->add_option("--n-c", gen.n_c, "um: increments per modulus");
    sub_gen->add_option("--n-m", gen.n_m, "um: number of train moduli");
    sub_gen->add_option("--tok-mode", gen.tok_mode, "tokenizer: unique or base_b (default)");
    sub_gen->add_option("--base", gen.base, "token base (default 256 / auto)");
    sub_gen->add_option("--digits", gen.digits, "digits per integer (default auto)");
    sub_gen->add_option("--out", gen.out, "output directory");
    sub_gen->add_option("--threads", gen.threads, "worker threads (0 = all cores)");
    sub_gen->add_option("--config", gen.config, "JSON config file (flags win)");

    TokenizeArgs tok;
    CLI::App* sub_tok = app.add_subcommand("tokenize", "Re-tokenize a corpus / export a stream");
    sub_tok->add_option("--in", tok.in, "corpus directory");
    sub_tok->add_option("--out", tok.out, "output token file");
    sub_tok->add_option("--tok-mode", tok.tok_mode, "unique or base_b (default: corpus spec)");
    sub_tok->add_option("--base", tok.base, "token base");
    sub_tok->add_option("--digits", tok.digits, "digits per integer");
    sub_tok->add_flag("--drop-last", tok.drop_last, "drop each record's final token");
    sub_tok->add_option("--threads", tok.threads, "worker threads (0 = all cores)");
    sub_tok->add_option("--config", tok.config, "JSON config file (flags win)");

    AnalyzeArgs ana;
    CLI::App* sub_ana = app.add_subcommand("analyze", "Digit-period report for one parameter set");
    sub_ana->add_option("--m", ana.m, "modulus");
    sub_ana->add_option("--a", ana.a, "multiplier");
    sub_ana->add_option("--c", ana.c, "increment");
    sub_ana->add_option("--x0", ana.x0, "seed value (default 0)");
    sub_ana->add_option("--stride", ana.stride, "observe every r-th element (default 1)");
    sub_ana->add_option("--len", ana.len, "values to generate (default auto)");
    sub_ana->add_option("--out", ana.out, "also write the report JSON here");
    sub_ana->add_option("--config", ana.config, "JSON config file (flags win)");

    PredictArgs pre;
    CLI::App* sub_pre = app.add_subcommand("predict", "Run a predictor or parameter cracker");
    sub_pre->add_option("--mode", pre.mode, "copy | full | unseen | crack-m | crack-unknown");
    sub_pre->add_option("--ctx", pre.ctx_text, "inline context values, comma separated");
    sub_pre->add_option("--m", pre.m, "modulus (copy/full/crack-m)");
    sub_pre->add_option("--in", pre.in, "corpus directory (dump mode)");
    sub_pre->add_option("--split", pre.split, "records to use: test (default) | train | all");
    sub_pre->add_option("--m-filter", pre.m_filter, "only records with this modulus");
    sub_pre->add_option("--from-t", pre.from_t, "first position to predict (default 1)");
    sub_pre->add_option("--max-t", pre.max_t, "last position to predict (default L)");
    sub_pre->add_flag("--no-refine", pre.no_refine, "unseen mode: raw greedy bound only");
    sub_pre->add_option("--out", pre.out, "dump file (default stdout)");
    sub_pre->add_option("--config", pre.config, "JSON config file (flags win)");

    EvalArgs eva;
    CLI::App* sub_eva = app.add_subcommand("eval", "Score a prediction dump");
    sub_eva->add_option("--dump", eva.dump, "prediction dump (JSONL)");
    sub_eva->add_option("--m", eva.m, "modulus the targets live under");
    sub_eva->add_option("--threshold", eva.threshold, "also report sustained crossing position");
    sub_eva->add_option("--csv", eva.csv, "write plotting CSV here");
    sub_eva->add_option("--out", eva.out, "also write the report JSON here");
    sub_eva->add_option("--config", eva.config, "JSON config file (flags win)");

    ScalingArgs sca;
    CLI::App* sub_sca = app.add_subcommand("scaling", "Context-vs-modulus power-law fit");
    sub_sca->add_option("--m-list", sca.m_list_text, "moduli, e.g. 2^8..2^16 or 1800,2048");
    sub_sca->add_option("--points", sca.points_file, "import m,context_needed CSV instead");
    sub_sca->add_option("--mode", sca.mode, "emulator: copy | full (default) | unseen");
    sub_sca->add_option("--threshold", sca.threshold, "accuracy threshold (default 1.0)");
    sub_sca->add_option("--len", sca.len, "positions per sequence (default 256; copy mode "
                                          "needs roughly 2*max(m))");
    sub_sca->add_option("--n-params", sca.n_params, "parameter pairs per modulus (default 8)");
    sub_sca->add_option("--n-seeds", sca.n_seeds, "seeds per parameter pair (default 8)");
    sub_sca->add_option("--seed", sca.seed, "sampler seed (default 1234)");
    sub_sca->add_option("--out", sca.out, "also write the fit JSON here");
    sub_sca->add_option("--config", sca.config, "JSON config file (flags win)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
        emit_error("validation", e.what());
        return exit_validation;
    }

    try {
        if (sub_gen->parsed()) return run_gen(gen, sub_gen, cfg);
        if (sub_tok->parsed()) return run_tokenize(tok, sub_tok, cfg);
        if (sub_ana->parsed()) return run_analyze(ana, sub_ana, cfg);
        if (sub_pre->parsed()) return run_predict(pre, sub_pre, cfg);
        if (sub_eva->parsed()) return run_eval(eva, sub_eva, cfg);
        if (sub_sca->parsed()) return run_scaling(sca, sub_sca, cfg);
        emit_error("validation", "no subcommand given");
        return exit_validation;
    } catch (const io_error& e) {
        emit_error("io", e.what());
        return exit_io;
    } catch (const std::filesystem::filesystem_error& e) {
        emit_error("io", e.what());
        return exit_io;
    } catch (const format_error& e) {
        emit_error("validation", e.what());
        return exit_validation;
    } catch (const capacity_error& e) {
        emit_error("validation", e.what());
        return exit_validation;
    } catch (const sizing_error& e) {
        emit_error("validation", e.what());
        return exit_validation;
    } catch (const insufficient_data_error& e) {
        emit_error("validation", e.what());
        return exit_validation;
    } catch (const inconsistency_error& e) {
        emit_error("validation", e.what());
        return exit_validation;
    } catch (const std::overflow_error& e) {
        emit_error("validation", e.what());
        return exit_validation;
    } catch (const std::invalid_argument& e) {
        emit_error("validation", e.what());
        return exit_validation;
    } catch (const std::domain_error& e) {
        emit_error("validation", e.what());
        return exit_validation;
    } catch (const std::out_of_range& e) {
        emit_error("validation", e.what());
        return exit_validation;
    } catch (const std::exception& e) {
        emit_error("internal", e.what());
        return exit_internal;
    }
}
