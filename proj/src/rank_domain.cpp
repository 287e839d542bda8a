#include "sketchlab/rank_domain.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "sketchlab/errors.hpp"
#include "sketchlab/qr.hpp"

namespace sketchlab {

RankSketch rank_sketch(const GroundSet& ground, const KeyMask& subset) {
    if (subset.size() != ground.n()) throw ConfigError("membership mask size must equal n");
    const auto& cfg = ground.config();
    RankSketch rs;
    if (cfg.kind == SketchKind::BottomK) {
        rs.y.reserve(cfg.k);
        std::uint64_t prev = 0;
        double last = -1.0;
        for (std::uint32_t p = 0; p < ground.table_size(0) && rs.y.size() < cfg.k; ++p) {
            if (!subset[ground.key_at(0, p)]) continue;
            const double u = ground.uniform_at(0, p);
            if (u == last) continue;  // distinct stored priorities
            rs.y.push_back(static_cast<std::uint64_t>(p) + 1 - prev);
            prev = p + 1;
            last = u;
        }
        if (rs.y.size() < cfg.k)
            throw StateError("incomplete sketch: fewer than k subset members");
        return rs;
    }
    rs.y.resize(ground.table_count());
    for (std::size_t t = 0; t < ground.table_count(); ++t) {
        const std::uint32_t p = ground.first_member(t, subset);
        if (p == kNoPos)
            throw StateError("incomplete sketch: a rank table has no subset member");
        rs.y[t] = static_cast<std::uint64_t>(p) + 1;
    }
    return rs;
}

Sketch value_sketch_from_ranks(const GroundSet& ground, const RankSketch& ranks) {
    const auto& cfg = ground.config();
    if (cfg.kind == SketchKind::BottomK) {
        if (ranks.y.size() != cfg.k) throw ConfigError("rank sketch must hold k gaps");
        std::vector<double> regs;
        regs.reserve(cfg.k);
        std::uint64_t pos = 0;
        for (std::uint64_t y : ranks.y) {
            if (y < 1) throw ConfigError("ranks must be positive");
            pos += y;
            if (pos > ground.table_size(0)) throw StateError("rank beyond the ground set");
            regs.push_back(ground.uniform_at(0, static_cast<std::uint32_t>(pos - 1)));
        }
        return Sketch::from_uniform(cfg, ground.seed(), std::move(regs));
    }
    if (ranks.y.size() != ground.table_count())
        throw ConfigError("rank sketch size must match the table count");
    if (cfg.repr == RegisterRepr::Hll8BitExponent) {
        std::vector<std::uint8_t> regs(cfg.k, 0);
        for (std::size_t t = 0; t < ground.table_count(); ++t) {
            const std::uint64_t y = ranks.y[t];
            if (y < 1) throw ConfigError("ranks must be positive");
            if (y > ground.table_size(t)) throw StateError("rank beyond the table");
            regs[t] = ground.exponent_at(t, static_cast<std::uint32_t>(y - 1));
        }
        return Sketch::from_exponents(cfg, ground.seed(), std::move(regs));
    }
    std::vector<double> regs(cfg.k, 1.0);
    for (std::size_t t = 0; t < ground.table_count(); ++t) {
        const std::uint64_t y = ranks.y[t];
        if (y < 1) throw ConfigError("ranks must be positive");
        if (y > ground.table_size(t)) throw StateError("rank beyond the table");
        regs[t] = ground.uniform_at(t, static_cast<std::uint32_t>(y - 1));
    }
    return Sketch::from_uniform(cfg, ground.seed(), std::move(regs));
}

std::vector<std::uint64_t> continuous_to_rank(std::span<const double> yprime) {
    std::vector<std::uint64_t> out(yprime.size());
    for (std::size_t i = 0; i < yprime.size(); ++i) {
        if (!(yprime[i] >= 0.0)) throw ConfigError("continuous ranks must be nonnegative");
        out[i] = static_cast<std::uint64_t>(std::floor(yprime[i])) + 1;
    }
    return out;
}

GeomCheckReport geom_distribution_check(const GroundSet& ground, double q,
                                        std::size_t trials, std::uint64_t rng_seed) {
    if (!(q > 0.0 && q <= 1.0)) throw ConfigError("rate q must lie in (0,1]");
    if (trials < 2) throw ConfigError("geom check needs at least two trials");
    const std::size_t n = ground.n();
    const std::size_t k = (ground.config().kind == SketchKind::BottomK)
                              ? ground.config().k
                              : ground.table_count();
    Rng rng(rng_seed);
    std::vector<std::uint32_t> members;
    KeyMask mask(n, 0);
    std::vector<std::uint64_t> ys;           // pooled
    std::vector<double> sums(trials);
    std::vector<std::vector<double>> cols(k);  // per-register series
    for (auto& c : cols) c.reserve(trials);
    ys.reserve(trials * k);

    std::size_t done = 0, attempts = 0;
    while (done < trials) {
        if (++attempts > trials * 4)
            throw StateError("too many incomplete-sketch redraws; raise q or n");
        members.clear();
        sample_members(n, q, rng, members);
        for (auto m : members) mask[m] = 1;
        bool ok = true;
        try {
            const RankSketch rs = rank_sketch(ground, mask);
            double sum = 0.0;
            for (std::size_t i = 0; i < rs.y.size(); ++i) {
                ys.push_back(rs.y[i]);
                cols[i].push_back(static_cast<double>(rs.y[i]));
                sum += static_cast<double>(rs.y[i]);
            }
            sums[done] = sum;
            ++done;
        } catch (const StateError&) {
            ok = false;  // redraw
        }
        for (auto m : members) mask[m] = 0;
        (void)ok;
    }

    GeomCheckReport rep;
    rep.trials = trials;
    const double kd = static_cast<double>(k);
    rep.expected_mean = kd / q;
    rep.expected_var = kd * (1.0 - q) / (q * q);
    rep.mean_sum = mean(sums);
    rep.var_sum = sample_variance(sums);
    rep.se_sum = std::sqrt(rep.var_sum / static_cast<double>(trials));

    // Chi-square of pooled Y against Geom[q], remaining tail mass in the last cell.
    std::uint64_t tmax = 1;
    for (auto y : ys) tmax = std::max(tmax, y);
    std::vector<double> obs(tmax, 0.0), exp(tmax, 0.0);
    for (auto y : ys) obs[y - 1] += 1.0;
    const double total = static_cast<double>(ys.size());
    double tail = 1.0;
    for (std::uint64_t t = 1; t < tmax; ++t) {
        const double p = q * std::pow(1.0 - q, static_cast<double>(t - 1));
        exp[t - 1] = total * p;
        tail -= p;
    }
    exp[tmax - 1] = total * tail;
    rep.chi = chi_square_gof(obs, exp);

    // Pairwise independence: max |Spearman rho| over register pairs.
    std::vector<std::vector<double>> ranks(k);
    for (std::size_t i = 0; i < k; ++i) ranks[i] = rank_transform(cols[i]);
    const double m = static_cast<double>(trials);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i + 1; j < k; ++j) {
            double sxy = 0.0, sxx = 0.0, syy = 0.0, mx = 0.0, my = 0.0;
            for (std::size_t t = 0; t < trials; ++t) {
                mx += ranks[i][t];
                my += ranks[j][t];
            }
            mx /= m;
            my /= m;
            for (std::size_t t = 0; t < trials; ++t) {
                const double dx = ranks[i][t] - mx, dy = ranks[j][t] - my;
                sxy += dx * dy;
                sxx += dx * dx;
                syy += dy * dy;
            }
            if (sxx > 0.0 && syy > 0.0)
                rep.max_abs_pairwise_rho =
                    std::max(rep.max_abs_pairwise_rho, std::abs(sxy / std::sqrt(sxx * syy)));
        }
    }
    return rep;
}

KeyPartition partition_keys(const GroundSet& ground, double q_a, double delta_c) {
    if (!(q_a > 0.0 && q_a < 1.0)) throw ConfigError("q_a must lie in (0,1)");
    if (!(delta_c > 0.0 && delta_c < 1.0)) throw ConfigError("delta_c must lie in (0,1)");
    const std::size_t n = ground.n();
    const auto& cfg = ground.config();
    KeyPartition part;
    part.q_a = q_a;
    part.delta_c = delta_c;
    part.n0.assign(n, 0);
    part.n0_star.assign(n, 0);
    part.transparent.assign(n, 0);

    const double depth = std::log(1.0 / delta_c) / q_a;
    if (cfg.kind == SketchKind::BottomK) {
        const auto prefix = static_cast<std::size_t>(
            std::ceil(depth * static_cast<double>(cfg.k)));
        for (std::uint32_t p = 0; p < std::min(prefix, ground.table_size(0)); ++p)
            part.n0[ground.key_at(0, p)] = 1;
    } else {
        const auto prefix = static_cast<std::size_t>(std::ceil(depth));
        for (std::size_t t = 0; t < ground.table_count(); ++t)
            for (std::uint32_t p = 0;
                 p < std::min<std::size_t>(prefix, ground.table_size(t)); ++p)
                part.n0[ground.key_at(t, p)] = 1;
    }
    for (auto key : ground.n0_star()) part.n0_star[key] = 1;
    for (std::size_t i = 0; i < n; ++i) {
        part.n0_size += part.n0[i];
        part.n0_star_size += part.n0_star[i];
        part.transparent[i] = part.n0[i] ? 0 : 1;
    }
    if (part.n0_size >= n)
        throw StateError("ground set too small: every key is low-rank");
    return part;
}

double rank_prefix_depth(double r, double k) { return std::log2(r * k) + 10.0; }

}  // namespace sketchlab
