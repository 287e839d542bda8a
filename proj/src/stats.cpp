#include "sketchlab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <boost/math/distributions/chi_squared.hpp>

#include "sketchlab/errors.hpp"

namespace sketchlab {

double mean(std::span<const double> xs) {
    if (xs.empty()) throw ConfigError("mean of empty sample");
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double sample_variance(std::span<const double> xs) {
    if (xs.size() < 2) throw ConfigError("variance needs at least two samples");
    double m = mean(xs);
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return ss / static_cast<double>(xs.size() - 1);
}

double quantile_sorted(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw ConfigError("quantile of empty sample");
    if (p < 0.0 || p > 1.0) throw ConfigError("quantile level outside [0,1]");
    const double h = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(h);
    if (lo + 1 >= sorted.size()) return sorted.back();
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

double ks_uniform(std::span<const double> sorted) {
    if (sorted.empty()) throw ConfigError("KS of empty sample");
    const double n = static_cast<double>(sorted.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double u = sorted[i];
        d = std::max(d, (static_cast<double>(i) + 1.0) / n - u);
        d = std::max(d, u - static_cast<double>(i) / n);
    }
    return d;
}

ChiSquareResult chi_square_gof(std::span<const double> observed,
                               std::span<const double> expected) {
    if (observed.size() != expected.size() || observed.empty())
        throw ConfigError("chi-square: mismatched or empty cell vectors");
    // Merge adjacent cells until each bin's expected count reaches 5.
    std::vector<double> obs, exp;
    double o = 0.0, e = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        o += observed[i];
        e += expected[i];
        if (e >= 5.0) {
            obs.push_back(o);
            exp.push_back(e);
            o = e = 0.0;
        }
    }
    if (e > 0.0 || o > 0.0) {
        if (exp.empty()) {
            obs.push_back(o);
            exp.push_back(e);
        } else {
            obs.back() += o;
            exp.back() += e;
        }
    }
    ChiSquareResult r;
    if (exp.size() < 2) {
        r.df = 0;
        r.p_value = 1.0;
        return r;
    }
    for (std::size_t i = 0; i < exp.size(); ++i) {
        const double d = obs[i] - exp[i];
        r.statistic += d * d / exp[i];
    }
    r.df = exp.size() - 1;
    boost::math::chi_squared dist(static_cast<double>(r.df));
    r.p_value = boost::math::cdf(boost::math::complement(dist, r.statistic));
    return r;
}

// Average ranks (1-based) with ties sharing their mean rank.
std::vector<double> rank_transform(std::span<const double> xs) {
    const std::size_t n = xs.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    std::vector<double> rank(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && xs[idx[j + 1]] == xs[idx[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t t = i; t <= j; ++t) rank[idx[t]] = r;
        i = j + 1;
    }
    return rank;
}

double spearman_rho(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size() || xs.size() < 3)
        throw ConfigError("spearman: need equal-length samples of size >= 3");
    const auto rx = rank_transform(xs);
    const auto ry = rank_transform(ys);
    const double mx = mean(rx), my = mean(ry);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        const double dx = rx[i] - mx, dy = ry[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

double mann_whitney_z(std::span<const double> a, std::span<const double> b) {
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    if (a.empty() || b.empty()) throw ConfigError("mann-whitney: empty sample");
    std::vector<double> pooled;
    pooled.reserve(a.size() + b.size());
    pooled.insert(pooled.end(), a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    const auto ranks = rank_transform(pooled);
    double ra = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) ra += ranks[i];
    const double u = ra - na * (na + 1.0) / 2.0;
    const double mu = na * nb / 2.0;
    // Tie-corrected variance.
    std::vector<double> sorted(pooled);
    std::sort(sorted.begin(), sorted.end());
    const double n = na + nb;
    double tie_term = 0.0;
    std::size_t i = 0;
    while (i < sorted.size()) {
        std::size_t j = i;
        while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
        const double t = static_cast<double>(j - i + 1);
        tie_term += t * t * t - t;
        i = j + 1;
    }
    const double var = na * nb / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if (var <= 0.0) return 0.0;
    return (u - mu) / std::sqrt(var);
}

double normal_sf(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

}  // namespace sketchlab
