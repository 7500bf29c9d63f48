#pragma once

// Accuracy analytics over prediction dumps.
//
// A dump is the neutral interchange format between anything that
// predicts (the emulators here, or an external model's sampled
// outputs) and this scorer: one JSONL line per prediction,
// {"seq":u64,"t":u32,"target":u64,"pred":u64}, where t is the
// 1-based sequence position the prediction is for.
//
// Scoring is per number: a prediction is correct iff it matches the
// target integer exactly. Per-digit curves score each base-p digit of
// each prime-power factor of m separately, which is what makes the
// multiplicative structure of the overall accuracy visible — for
// predictors whose digit errors are independent, the overall curve
// tracks the product of the digit curves. product_law_check measures
// the worst-case gap between the two.
//
// context_to_threshold implements the sustained-crossing rule: the
// reported position is the first measured t at and after which the
// curve never drops below the threshold again. Single touches that
// later dip back do not count.
//
// fit_power_law is a plain OLS fit in log-log space for curves of
// "context needed vs modulus"; the unseen-moduli reference band for
// the exponent is [0.24, 0.33] and the fit records whether it landed
// inside.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "prnglab/common.hpp"
#include "prnglab/factor.hpp"

namespace prnglab {

struct PredictionEntry {
    u64 seq = 0;   // sequence id (record idx)
    u32 t = 0;     // 1-based position within the sequence
    u64 target = 0;
    u64 pred = 0;
};

struct PositionAccuracy {
    u32 position = 0;
    u64 n_samples = 0;
    u64 n_correct = 0;
    [[nodiscard]] double accuracy() const {
        return static_cast<double>(n_correct) / static_cast<double>(n_samples);
    }
};

struct DigitCurve {
    u64 prime = 0;
    u32 digit_index = 0;  // 1-based within the factor: digit j has period p^j
    std::vector<PositionAccuracy> curve;
};

struct AccuracyReport {
    u64 modulus = 0;
    std::vector<PositionAccuracy> per_position;  // exact-match, per number
    std::vector<DigitCurve> per_digit;
    std::vector<double> product_curve;  // prod of digit accuracies, aligned with per_position
    // Integers spanning several tokens could alternatively be scored
    // per token; this report scores per number only and says so.
    std::string scoring = "per-number";
};

// ------------------------------------------------------------------
// Report construction
// ------------------------------------------------------------------

/// Aggregate a dump into per-position and per-digit curves for
/// modulus m. Targets must be < m (they come from sequences mod m);
/// an out-of-range prediction is kept — it scores zero on every digit
/// and on the exact match, which is what an unconstrained model head
/// earns for emitting it.
[[nodiscard]] inline AccuracyReport score_predictions(const std::vector<PredictionEntry>& entries,
                                                      u64 m) {
    if (m < 2) throw std::invalid_argument("score_predictions: modulus must be >= 2");
    AccuracyReport rep;
    rep.modulus = m;
    const Factorization factors = factorize(m);

    // (prime power value p^j, p^{j-1}) per digit row, factor-major.
    struct DigitKey {
        u64 prime;
        u32 index;
        u64 pj, pj1;
    };
    std::vector<DigitKey> keys;
    for (const auto& pp : factors) {
        u64 pj = 1;
        for (u32 j = 1; j <= pp.exponent; ++j) {
            pj *= pp.prime;
            keys.push_back({pp.prime, j, pj, pj / pp.prime});
        }
    }

    std::map<u32, PositionAccuracy> overall;
    std::vector<std::map<u32, PositionAccuracy>> digits(keys.size());
    for (const auto& e : entries) {
        if (e.t == 0) throw std::invalid_argument("score_predictions: positions are 1-based");
        if (e.target >= m)
            throw std::domain_error("score_predictions: target " + std::to_string(e.target) +
                                    " out of range for m=" + std::to_string(m));
        auto& o = overall[e.t];
        o.position = e.t;
        ++o.n_samples;
        if (e.pred == e.target) ++o.n_correct;
        const bool pred_in_range = e.pred < m;
        for (std::size_t d = 0; d < keys.size(); ++d) {
            auto& cell = digits[d][e.t];
            cell.position = e.t;
            ++cell.n_samples;
            const auto& k = keys[d];
            if (pred_in_range && (e.target % k.pj) / k.pj1 == (e.pred % k.pj) / k.pj1)
                ++cell.n_correct;
        }
    }

    rep.per_position.reserve(overall.size());
    for (const auto& [t, cell] : overall) rep.per_position.push_back(cell);
    for (std::size_t d = 0; d < keys.size(); ++d) {
        DigitCurve dc;
        dc.prime = keys[d].prime;
        dc.digit_index = keys[d].index;
        dc.curve.reserve(digits[d].size());
        for (const auto& [t, cell] : digits[d]) dc.curve.push_back(cell);
        rep.per_digit.push_back(std::move(dc));
    }

    // Digit maps are keyed by the same positions as the overall map
    // (every entry feeds every digit), so rows align by index.
    rep.product_curve.resize(rep.per_position.size(), 1.0);
    for (const auto& dc : rep.per_digit)
        for (std::size_t i = 0; i < dc.curve.size(); ++i)
            rep.product_curve[i] *= dc.curve[i].accuracy();
    return rep;
}

/// Convenience for aligned blocks: predictions[s][i] vs targets[s][i]
/// is the prediction for position first_t + i of sequence s.
[[nodiscard]] inline AccuracyReport score_aligned(const std::vector<std::vector<u64>>& predictions,
                                                  const std::vector<std::vector<u64>>& targets,
                                                  u64 m, u32 first_t = 1) {
    if (predictions.size() != targets.size())
        throw std::invalid_argument("score_aligned: sequence counts differ");
    std::vector<PredictionEntry> entries;
    for (std::size_t s = 0; s < predictions.size(); ++s) {
        if (predictions[s].size() != targets[s].size())
            throw std::invalid_argument("score_aligned: length mismatch in sequence " +
                                        std::to_string(s));
        for (std::size_t i = 0; i < predictions[s].size(); ++i)
            entries.push_back({s, first_t + static_cast<u32>(i), targets[s][i],
                               predictions[s][i]});
    }
    return score_predictions(entries, m);
}

// ------------------------------------------------------------------
// Derived measurements
// ------------------------------------------------------------------

struct ProductLawResult {
    double max_deviation = 0.0;
    std::vector<double> deviations;  // aligned with report.per_position
};

[[nodiscard]] inline ProductLawResult product_law_check(const AccuracyReport& rep) {
    ProductLawResult out;
    out.deviations.reserve(rep.per_position.size());
    for (std::size_t i = 0; i < rep.per_position.size(); ++i) {
        const double dev = std::abs(rep.per_position[i].accuracy() - rep.product_curve[i]);
        out.deviations.push_back(dev);
        out.max_deviation = std::max(out.max_deviation, dev);
    }
    return out;
}

/// First measured position from which the curve stays >= threshold.
/// Empty curves and curves that end below the threshold report none.
[[nodiscard]] inline std::optional<u32> context_to_threshold(
    const std::vector<PositionAccuracy>& curve, double threshold) {
    if (!(threshold > 0.0) || threshold > 1.0)
        throw std::invalid_argument("context_to_threshold: threshold must be in (0, 1]");
    std::optional<u32> candidate;
    for (auto it = curve.rbegin(); it != curve.rend(); ++it) {
        if (it->accuracy() >= threshold)
            candidate = it->position;
        else
            break;  // everything earlier is before a dip; not sustained
    }
    return candidate;
}

/// Same rule on a bare curve; index i holds position i+1.
[[nodiscard]] inline std::optional<u32> context_to_threshold(const std::vector<double>& curve,
                                                             double threshold) {
    if (!(threshold > 0.0) || threshold > 1.0)
        throw std::invalid_argument("context_to_threshold: threshold must be in (0, 1]");
    std::optional<u32> candidate;
    for (std::size_t i = curve.size(); i-- > 0;) {
        if (curve[i] >= threshold)
            candidate = static_cast<u32>(i + 1);
        else
            break;
    }
    return candidate;
}

// ------------------------------------------------------------------
// Scaling fits
// ------------------------------------------------------------------

struct ScalingPoint {
    u64 m = 0;
    double context_needed = 0.0;
};

struct ScalingFit {
    std::vector<ScalingPoint> points;
    double gamma = 0.0;
    double intercept = 0.0;  // of log(context) against log(m)
    double r_squared = 0.0;
    double threshold = 0.0;
    bool in_um_band = false;  // gamma within [um_band_low, um_band_high]
};

inline constexpr double um_band_low = 0.24;
inline constexpr double um_band_high = 0.33;

/// OLS fit of log(context_needed) = gamma * log(m) + intercept.
[[nodiscard]] inline ScalingFit fit_power_law(const std::vector<ScalingPoint>& points,
                                              double threshold) {
    if (points.size() < 3)
        throw insufficient_data_error("fit_power_law: need at least 3 points, got " +
                                      std::to_string(points.size()));
    for (const auto& p : points)
        if (p.m < 1 || !(p.context_needed > 0.0))
            throw std::domain_error("fit_power_law: points must be positive");

    const double n = static_cast<double>(points.size());
    double sx = 0, sy = 0;
    for (const auto& p : points) {
        sx += std::log(static_cast<double>(p.m));
        sy += std::log(p.context_needed);
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (const auto& p : points) {
        const double dx = std::log(static_cast<double>(p.m)) - mx;
        const double dy = std::log(p.context_needed) - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx == 0.0) throw std::domain_error("fit_power_law: all moduli identical");

    ScalingFit fit;
    fit.points = points;
    fit.threshold = threshold;
    fit.gamma = sxy / sxx;
    fit.intercept = my - fit.gamma * mx;
    double ss_res = 0;
    for (const auto& p : points) {
        const double y = std::log(p.context_needed);
        const double yhat = fit.gamma * std::log(static_cast<double>(p.m)) + fit.intercept;
        ss_res += (y - yhat) * (y - yhat);
    }
    fit.r_squared = syy == 0.0 ? 1.0 : 1.0 - ss_res / syy;
    fit.in_um_band = fit.gamma >= um_band_low && fit.gamma <= um_band_high;
    return fit;
}

// ------------------------------------------------------------------
// Dump and report I/O
// ------------------------------------------------------------------

inline void write_dump(const std::vector<PredictionEntry>& entries, std::ostream& os) {
    for (const auto& e : entries)
        os << "{\"seq\":" << e.seq << ",\"t\":" << e.t << ",\"target\":" << e.target
           << ",\"pred\":" << e.pred << "}\n";
    if (!os) throw io_error("write_dump: stream write failed");
}

inline void write_dump(const std::vector<PredictionEntry>& entries,
                       const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw io_error("write_dump: cannot open " + path.string());
    write_dump(entries, f);
}

[[nodiscard]] inline std::vector<PredictionEntry> read_dump(std::istream& is) {
    std::vector<PredictionEntry> out;
    std::string line;
    u64 lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
            out.push_back({j.at("seq").get<u64>(), j.at("t").get<u32>(),
                           j.at("target").get<u64>(), j.at("pred").get<u64>()});
        } catch (const nlohmann::json::exception& e) {
            throw format_error("read_dump: bad record at line " + std::to_string(lineno) + ": " +
                               e.what());
        }
    }
    return out;
}

[[nodiscard]] inline std::vector<PredictionEntry> read_dump(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw io_error("read_dump: cannot open " + path.string());
    return read_dump(f);
}

[[nodiscard]] inline nlohmann::ordered_json report_to_json(const AccuracyReport& rep) {
    nlohmann::ordered_json j;
    j["modulus"] = rep.modulus;
    j["scoring"] = rep.scoring;
    auto cell = [](const PositionAccuracy& c) {
        return nlohmann::ordered_json{
            {"t", c.position}, {"n", c.n_samples}, {"acc", c.accuracy()}};
    };
    j["per_position"] = nlohmann::ordered_json::array();
    for (const auto& c : rep.per_position) j["per_position"].push_back(cell(c));
    j["per_digit"] = nlohmann::ordered_json::array();
    for (const auto& dc : rep.per_digit) {
        nlohmann::ordered_json row;
        row["prime"] = dc.prime;
        row["digit"] = dc.digit_index;
        row["curve"] = nlohmann::ordered_json::array();
        for (const auto& c : dc.curve) row["curve"].push_back(cell(c));
        j["per_digit"].push_back(std::move(row));
    }
    j["product_curve"] = rep.product_curve;
    const ProductLawResult law = product_law_check(rep);
    j["product_law_max_deviation"] = law.max_deviation;
    return j;
}

[[nodiscard]] inline nlohmann::ordered_json fit_to_json(const ScalingFit& fit) {
    nlohmann::ordered_json j;
    j["threshold"] = fit.threshold;
    j["gamma"] = fit.gamma;
    j["intercept"] = fit.intercept;
    j["r_squared"] = fit.r_squared;
    j["in_um_band"] = fit.in_um_band;
    j["um_band"] = {um_band_low, um_band_high};
    j["points"] = nlohmann::ordered_json::array();
    for (const auto& p : fit.points)
        j["points"].push_back({{"m", p.m}, {"context_needed", p.context_needed}});
    return j;
}

/// Plotting-friendly CSV: one row per measured position with the
/// overall curve, the digit-product curve, and one column per digit.
[[nodiscard]] inline std::string report_to_csv(const AccuracyReport& rep) {
    std::ostringstream os;
    os << "t,overall,product";
    for (const auto& dc : rep.per_digit) os << ",p" << dc.prime << "_d" << dc.digit_index;
    os << "\n";
    for (std::size_t i = 0; i < rep.per_position.size(); ++i) {
        os << rep.per_position[i].position << "," << rep.per_position[i].accuracy() << ","
           << rep.product_curve[i];
        for (const auto& dc : rep.per_digit) os << "," << dc.curve[i].accuracy();
        os << "\n";
    }
    return os.str();
}

}  // namespace prnglab
