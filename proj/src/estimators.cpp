#include "sketchlab/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "sketchlab/csvio.hpp"
#include "sketchlab/errors.hpp"
#include "sketchlab/keygen.hpp"
#include "sketchlab/rng.hpp"
#include "sketchlab/stats.hpp"

namespace sketchlab {

double statistic(const Sketch& s) {
    const auto& cfg = s.config();
    if (cfg.repr == RegisterRepr::Hll8BitExponent)
        throw ConfigError("the sum statistic is undefined for exponent registers");
    const auto& u = s.raw_uniform();
    if (cfg.kind == SketchKind::BottomK) {
        if (u.size() < cfg.k)
            throw StateError("bottom-k statistic underflow: fewer than k values present");
        return u[cfg.k - 1];
    }
    double t = 0.0;
    for (double x : u) t += exp1_from_u(x);
    return t;
}

double hll_estimate_from_exponents(std::span<const std::uint8_t> exponents) {
    static const auto pow2neg = [] {
        std::vector<double> v(256);
        for (int e = 0; e < 256; ++e) v[e] = std::ldexp(1.0, -e);
        return v;
    }();
    const auto k = static_cast<std::uint32_t>(exponents.size());
    double denom = 0.0;
    std::size_t empty = 0;
    for (std::uint8_t e : exponents) {
        denom += pow2neg[e];
        if (e == 0) ++empty;
    }
    const double kd = static_cast<double>(k);
    const double raw = hll_alpha(k) * kd * kd / denom;
    if (empty > 0 && raw <= 2.5 * kd)
        return kd * std::log(kd / static_cast<double>(empty));
    return raw;
}

double hll_alpha(std::uint32_t k) {
    if (k >= 128) return 0.7213 / (1.0 + 1.079 / static_cast<double>(k));
    if (k >= 64) return 0.709;
    if (k >= 32) return 0.697;
    if (k >= 16) return 0.673;
    // Below the standard table; the asymptotic constant is a serviceable fallback.
    return 0.7213 / (1.0 + 1.079 / static_cast<double>(k));
}

Estimate estimate(const Sketch& s, EstimatorKind kind) {
    const auto& cfg = s.config();
    Estimate out;
    switch (kind) {
        case EstimatorKind::StandardKMins: {
            if (cfg.kind != SketchKind::KMins)
                throw ConfigError("StandardKMins estimator requires a KMins sketch");
            const double t = statistic(s);
            if (t == 0.0) {
                out.value = std::numeric_limits<double>::infinity();
                out.t_zero = true;
                return out;
            }
            out.value = static_cast<double>(cfg.k - 1) / t;
            return out;
        }
        case EstimatorKind::StandardBottomK: {
            if (cfg.kind != SketchKind::BottomK)
                throw ConfigError("StandardBottomK estimator requires a BottomK sketch");
            if (s.filled() < cfg.k) {
                // Below capacity the sketch stores every priority: exact count.
                out.value = static_cast<double>(s.filled());
                out.exact_small = true;
                return out;
            }
            const double t = statistic(s);
            if (t == 0.0) {
                out.value = std::numeric_limits<double>::infinity();
                out.t_zero = true;
                return out;
            }
            out.value = static_cast<double>(cfg.k - 1) / t;
            return out;
        }
        case EstimatorKind::HllHybrid: {
            if (cfg.kind != SketchKind::KPartition || cfg.repr != RegisterRepr::Hll8BitExponent)
                throw ConfigError("HllHybrid estimator requires a KPartition exponent sketch");
            out.value = hll_estimate_from_exponents(s.exponents());
            return out;
        }
    }
    throw ConfigError("unknown estimator kind");
}

double inverse_estimate(const Sketch& s, EstimatorKind kind) {
    const Estimate e = estimate(s, kind);
    if (e.value == 0.0) return std::numeric_limits<double>::infinity();
    return 1.0 / e.value;
}

SketchConfig hll_config_from_epsilon(double epsilon) {
    if (!(epsilon > 0.0 && epsilon <= 1.0))
        throw ConfigError("epsilon must lie in (0, 1]");
    const double kd = std::ceil(1.04 / (epsilon * epsilon));
    return SketchConfig{SketchKind::KPartition, static_cast<std::uint32_t>(kd),
                        RegisterRepr::Hll8BitExponent};
}

std::string ErrorReport::csv_header() const {
    return "kind,k,cardinality,trials,nrmse,q50,q90,q99";
}

std::string ErrorReport::csv_row(const SketchConfig& cfg, std::size_t cardinality) const {
    const char* kind = cfg.kind == SketchKind::KMins     ? "kmins"
                       : cfg.kind == SketchKind::BottomK ? "bottomk"
                                                         : "kpartition";
    std::string row = kind;
    row += ',' + format_uint(cfg.k);
    row += ',' + format_uint(cardinality);
    row += ',' + format_uint(trials);
    row += ',' + format_double(nrmse);
    row += ',' + format_double(q50);
    row += ',' + format_double(q90);
    row += ',' + format_double(q99);
    return row;
}

ErrorReport measure_error(const SketchConfig& config, EstimatorKind kind,
                          std::size_t cardinality, std::size_t trials,
                          std::uint64_t base_seed) {
    config.validate();
    if (trials < 1) throw ConfigError("measure_error needs at least one trial");
    if (cardinality < 1) throw ConfigError("measure_error needs a positive cardinality");
    Rng keyrng(derive_stream(base_seed, 0));
    const auto keys = generate_keys(cardinality, 10, keyrng);
    const double truth = static_cast<double>(cardinality);

    ErrorReport rep;
    rep.trials = trials;
    std::vector<double> abs_rel(trials);
    double sum_sq = 0.0, sum_est = 0.0;
    for (std::size_t i = 0; i < trials; ++i) {
        const Seed seed{derive_stream(base_seed, 2 * i + 1), derive_stream(base_seed, 2 * i + 2)};
        const Sketch s = Sketch::of_set(config, seed, keys);
        const double est = estimate(s, kind).value;
        const double rel = (est - truth) / truth;
        sum_sq += rel * rel;
        sum_est += est;
        abs_rel[i] = std::abs(rel);
    }
    rep.nrmse = std::sqrt(sum_sq / static_cast<double>(trials));
    rep.mean_estimate = sum_est / static_cast<double>(trials);
    std::sort(abs_rel.begin(), abs_rel.end());
    rep.q50 = quantile_sorted(abs_rel, 0.5);
    rep.q90 = quantile_sorted(abs_rel, 0.9);
    rep.q99 = quantile_sorted(abs_rel, 0.99);
    return rep;
}

}  // namespace sketchlab
