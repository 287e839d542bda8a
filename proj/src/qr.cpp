#include "sketchlab/qr.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "sketchlab/errors.hpp"

namespace sketchlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

QrConfig QrConfig::make(QrStrategy strategy, double A, std::uint32_t k, std::uint32_t k_prime) {
    if (!(A > 0.0) || !std::isfinite(A))
        throw ConfigError("threshold A must be positive and finite");
    if (k == 0) throw ConfigError("k must be positive");
    QrConfig cfg;
    cfg.strategy = strategy;
    cfg.A = A;
    cfg.delta = std::min(0.5 / std::sqrt(static_cast<double>(k)), 0.49);
    if (strategy == QrStrategy::ComponentRestricted) {
        if (k_prime == 0 || k_prime > k)
            throw ConfigError("ComponentRestricted needs 0 < k' <= k");
        cfg.k_prime = k_prime;
    }
    const std::uint32_t m = cfg.k_prime > 0 ? cfg.k_prime : k;
    cfg.failure_threshold = std::log2(static_cast<double>(m)) / 2.0;
    return cfg;
}

void sample_members(std::size_t n, double rate, Rng& rng, std::vector<std::uint32_t>& out) {
    if (n == 0 || rate <= 0.0) return;
    if (rate >= 1.0) {
        for (std::size_t i = 0; i < n; ++i) out.push_back(static_cast<std::uint32_t>(i));
        return;
    }
    if (rate == 0.5) {
        // One engine word covers 64 coin flips.
        for (std::size_t base = 0; base < n; base += 64) {
            std::uint64_t w = rng.u64();
            const std::size_t width = std::min<std::size_t>(64, n - base);
            if (width < 64) w &= (std::uint64_t{1} << width) - 1;
            while (w != 0) {
                const auto b = static_cast<unsigned>(std::countr_zero(w));
                out.push_back(static_cast<std::uint32_t>(base + b));
                w &= w - 1;
            }
        }
        return;
    }
    // Geometric skips: P[skip = j] = rate * (1 - rate)^j.
    const double lq = std::log1p(-rate);
    double i = 0.0;
    const auto nd = static_cast<double>(n);
    while (true) {
        i += std::floor(std::log(rng.u01()) / lq);
        if (!(i < nd)) break;
        out.push_back(static_cast<std::uint32_t>(i));
        i += 1.0;
    }
}

QuerySession::QuerySession(const GroundSet& ground, QrConfig config) : g_(ground), cfg_(config) {
    const auto& sc = g_.config();
    if (!(cfg_.A >= 1.0) || 2.0 * cfg_.A > static_cast<double>(g_.n()))
        throw ConfigError("QR needs 1 <= A and 2A <= n");
    switch (cfg_.strategy) {
        case QrStrategy::ReferenceThreshold:
            if (sc.kind != SketchKind::KMins || sc.repr != RegisterRepr::FullPrecision)
                throw ConfigError("ReferenceThreshold needs full-precision KMins");
            break;
        case QrStrategy::SymmetricThreshold:
            break;
        case QrStrategy::ComponentRestricted:
            if (sc.kind == SketchKind::BottomK)
                throw ConfigError("ComponentRestricted needs per-register hashmaps");
            if (cfg_.k_prime == 0 || cfg_.k_prime > g_.table_count())
                throw ConfigError("ComponentRestricted needs 0 < k' <= k");
            break;
    }
    if (cfg_.delta <= 0.0)
        cfg_.delta = std::min(0.5 / std::sqrt(static_cast<double>(sc.k)), 0.49);
    if (!(cfg_.delta > 0.0 && cfg_.delta < 0.5))
        throw ConfigError("delta must lie in (0, 0.5)");
    if (cfg_.failure_threshold <= 0.0) {
        const std::uint32_t m =
            cfg_.strategy == QrStrategy::ComponentRestricted ? cfg_.k_prime : sc.k;
        cfg_.failure_threshold = std::log2(static_cast<double>(m)) / 2.0;
    }
    mask_.assign(g_.n(), 0);
    mask_first_.assign(g_.table_count(), kNoPos);
}

void QuerySession::mask_add(std::uint32_t key) {
    if (key >= g_.n()) throw ConfigError("mask key out of range");
    if (mask_[key]) return;
    mask_[key] = 1;
    ++mask_size_;
    if (g_.config().kind == SketchKind::KPartition) {
        const auto t = g_.part_of(key);
        const auto p = g_.pos_of_key(t, key);
        if (p < mask_first_[t]) mask_first_[t] = p;
        return;
    }
    for (std::size_t t = 0; t < g_.table_count(); ++t) {
        const auto p = g_.pos_of_key(t, key);
        if (p < mask_first_[t]) mask_first_[t] = p;
    }
}

std::uint32_t QuerySession::effective_k_of_mask() const { return effective_registers(g_, mask_); }

QrResponse QuerySession::respond(const KeyMask& query) const {
    if (query.size() != g_.n()) throw ConfigError("query mask size must equal n");
    return respond_scan(query);
}

QrResponse QuerySession::respond_scan(const KeyMask& query) const {
    const auto& sc = g_.config();
    QrResponse resp;
    const double A = cfg_.A;

    if (sc.kind == SketchKind::BottomK) {
        // Walk V = query (union) mask in priority order, deduplicating equal
        // priorities exactly as the sketch does; sum-of-gaps telescopes to the
        // rank of the k-th distinct member.
        const std::size_t sz = g_.table_size(0);
        std::uint32_t found = 0;
        std::uint32_t live = 0;
        double last = -1.0;
        double sum_y = kInf;
        for (std::uint32_t p = 0; p < sz; ++p) {
            const std::uint32_t key = g_.key_at(0, p);
            if (!query[key] && !mask_[key]) continue;
            const double u = g_.uniform_at(0, p);
            if (u == last) continue;
            last = u;
            ++found;
            if (!mask_[key]) ++live;
            if (found == sc.k) {
                sum_y = static_cast<double>(p) + 1.0;
                break;
            }
        }
        resp.effective_k = live;
        resp.failed = static_cast<double>(live) < cfg_.failure_threshold;
        resp.score = sum_y;
        const double tau =
            static_cast<double>(sc.k) * static_cast<double>(g_.n()) / (std::numbers::sqrt2 * A);
        resp.z = sum_y <= tau ? 1 : 0;
        return resp;
    }

    const std::size_t tcount =
        cfg_.strategy == QrStrategy::ComponentRestricted ? cfg_.k_prime : g_.table_count();
    std::uint32_t live = 0;
    double sum_y = 0.0;
    double t_alive = 0.0;
    for (std::size_t t = 0; t < tcount; ++t) {
        const std::uint32_t mf = mask_first_[t];
        const auto sz = static_cast<std::uint32_t>(g_.table_size(t));
        const std::uint32_t limit = std::min(mf, sz);
        std::uint32_t qpos = kNoPos;
        for (std::uint32_t p = 0; p < limit; ++p) {
            if (query[g_.key_at(t, p)]) {
                qpos = p;
                break;
            }
        }
        if (qpos != kNoPos) {
            // Live: the union minimum is a query key ranked above every mask key.
            ++live;
            if (cfg_.strategy == QrStrategy::ReferenceThreshold)
                t_alive += g_.value_at(t, qpos);
            else
                sum_y += static_cast<double>(qpos) + 1.0;
        } else if (mf != kNoPos) {
            sum_y += static_cast<double>(mf) + 1.0;  // dead: minimum is a mask key
        } else {
            sum_y += static_cast<double>(sz) + 1.0;  // empty part: rank past the end
        }
    }
    resp.effective_k = live;
    resp.failed = static_cast<double>(live) < cfg_.failure_threshold;
    if (cfg_.strategy == QrStrategy::ReferenceThreshold) {
        // Mask keys are certain members; live registers estimate the rest.
        double est = static_cast<double>(mask_size_);
        if (live >= 2 && t_alive > 0.0)
            est += (static_cast<double>(live) - 1.0) / t_alive;
        resp.score = est;
        resp.z = est >= std::numbers::sqrt2 * A ? 1 : 0;
    } else {
        const double tau = static_cast<double>(tcount) * static_cast<double>(g_.n()) /
                           (std::numbers::sqrt2 * A);
        resp.score = sum_y;
        resp.z = sum_y <= tau ? 1 : 0;
    }
    return resp;
}

std::vector<QrResponse> QuerySession::respond_batch(std::span<const QueryDraw> draws) const {
    std::vector<QrResponse> out;
    out.reserve(draws.size());
    KeyMask query(g_.n(), 0);
    std::vector<std::uint32_t> members;
    for (const auto& d : draws) {
        members.clear();
        Rng rng(d.stream);
        sample_members(g_.n(), d.rate, rng, members);
        for (auto m : members) query[m] = 1;
        out.push_back(respond_scan(query));
        for (auto m : members) query[m] = 0;
    }
    return out;
}

std::uint32_t effective_registers(const GroundSet& ground, const KeyMask& mask,
                                  const Sketch* union_sketch) {
    if (mask.size() != ground.n()) throw ConfigError("mask size must equal n");
    const auto& sc = ground.config();
    if (union_sketch != nullptr && !(union_sketch->config() == sc))
        throw IncompatibleError("union sketch config must match the ground set");

    if (sc.kind == SketchKind::BottomK) {
        std::uint32_t masked = 0;
        if (union_sketch != nullptr) {
            for (double u : union_sketch->raw_uniform()) {
                const auto p = ground.pos_of_value(0, u);
                if (p != kNoPos && mask[ground.key_at(0, p)]) ++masked;
            }
        } else {
            const std::size_t sz = ground.table_size(0);
            std::uint32_t found = 0;
            double last = -1.0;
            for (std::uint32_t p = 0; p < sz && found < sc.k; ++p) {
                const double u = ground.uniform_at(0, p);
                if (u == last) continue;
                last = u;
                ++found;
                if (mask[ground.key_at(0, p)]) ++masked;
            }
        }
        return sc.k - masked;
    }

    // A register is dead when a mask key ranks at or above the union minimum.
    std::uint32_t live = 0;
    for (std::size_t t = 0; t < ground.table_count(); ++t) {
        const auto sz = static_cast<std::uint32_t>(ground.table_size(t));
        if (sz == 0) {
            ++live;
            continue;
        }
        std::uint32_t upos = 0;
        if (sc.repr == RegisterRepr::Hll8BitExponent) {
            const std::uint8_t e =
                union_sketch != nullptr ? union_sketch->exponents()[t] : ground.exponent_at(t, 0);
            if (e == 0) {
                ++live;  // empty union register: the mask is empty there too
                continue;
            }
            // Equal exponents tie over a run; a mask key anywhere in the
            // run already pins the register value.
            std::uint32_t lo = 0, hi = sz;
            while (lo < hi) {
                const std::uint32_t mid = (lo + hi) / 2;
                if (ground.exponent_at(t, mid) >= e)
                    lo = mid + 1;
                else
                    hi = mid;
            }
            upos = lo - 1;
        } else if (union_sketch != nullptr) {
            const double u = union_sketch->raw_uniform()[t];
            if (u == 1.0) {
                ++live;
                continue;
            }
            upos = ground.pos_of_value(t, exp1_from_u(u));
            if (upos == kNoPos)
                throw IncompatibleError("union register value not in the ground set");
        }
        bool dead = false;
        for (std::uint32_t p = 0; p <= upos && !dead; ++p)
            if (mask[ground.key_at(t, p)]) dead = true;
        if (!dead) ++live;
    }
    return live;
}

CorrectnessAudit audit_correctness(const std::function<int(const KeyMask&)>& respond_fn,
                                   const GroundSet& ground, double A,
                                   std::span<const std::size_t> cardinalities,
                                   std::size_t trials_per_bucket, std::uint64_t rng_seed,
                                   const KeyMask* forced_union) {
    if (trials_per_bucket == 0) throw ConfigError("audit needs at least one trial per bucket");
    const std::size_t n = ground.n();

    std::size_t forced_count = 0;
    std::vector<std::uint32_t> pool;
    pool.reserve(n);
    if (forced_union != nullptr) {
        if (forced_union->size() != n) throw ConfigError("forced union mask size must equal n");
        for (std::uint32_t i = 0; i < n; ++i) {
            if ((*forced_union)[i])
                ++forced_count;
            else
                pool.push_back(i);
        }
    } else {
        pool.resize(n);
        std::iota(pool.begin(), pool.end(), 0u);
    }

    Rng rng(rng_seed);
    CorrectnessAudit audit;
    KeyMask query = forced_union != nullptr ? *forced_union : KeyMask(n, 0);
    for (const std::size_t c : cardinalities) {
        if (c < std::max<std::size_t>(forced_count, 1) || c > n) continue;
        const std::size_t need = c - forced_count;
        if (need > pool.size()) continue;
        std::size_t z1 = 0;
        for (std::size_t trial = 0; trial < trials_per_bucket; ++trial) {
            // Partial Fisher-Yates: a uniform `need`-subset of the pool.
            for (std::size_t i = 0; i < need; ++i) {
                const std::size_t j = i + rng.below(pool.size() - i);
                std::swap(pool[i], pool[j]);
                query[pool[i]] = 1;
            }
            if (respond_fn(query) == 1) ++z1;
            for (std::size_t i = 0; i < need; ++i) query[pool[i]] = 0;
        }
        BucketRate bucket;
        bucket.cardinality = c;
        bucket.trials = trials_per_bucket;
        bucket.rate_z1 = static_cast<double>(z1) / static_cast<double>(trials_per_bucket);
        if (static_cast<double>(c) < A)
            audit.worst_low = std::max(audit.worst_low, bucket.rate_z1);
        if (static_cast<double>(c) > 2.0 * A)
            audit.worst_high = std::max(audit.worst_high, 1.0 - bucket.rate_z1);
        audit.buckets.push_back(bucket);
    }
    return audit;
}

std::vector<std::size_t> default_audit_grid(double A, std::size_t n) {
    std::vector<std::size_t> grid;
    for (const double v : {A / 4.0, A / 2.0, 3.0 * A / 4.0, A - 1.0}) {
        const auto c = static_cast<std::size_t>(std::llround(std::max(1.0, v)));
        if (c >= 1 && static_cast<double>(c) < A && c <= n) grid.push_back(c);
    }
    for (const double v : {2.0 * A + 1.0, 3.0 * A, 4.0 * A, 8.0 * A, 16.0 * A}) {
        const auto c = static_cast<std::size_t>(std::llround(v));
        if (static_cast<double>(c) > 2.0 * A && c <= n) grid.push_back(c);
    }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    return grid;
}

double best_threshold_error(std::span<const double> low_scores,
                            std::span<const double> high_scores) {
    if (low_scores.empty() || high_scores.empty())
        throw ConfigError("both score samples must be nonempty");
    std::vector<double> low(low_scores.begin(), low_scores.end());
    std::vector<double> high(high_scores.begin(), high_scores.end());
    std::sort(low.begin(), low.end());
    std::sort(high.begin(), high.end());
    std::vector<double> cand;
    cand.reserve(low.size() + high.size() + 1);
    cand.insert(cand.end(), low.begin(), low.end());
    cand.insert(cand.end(), high.begin(), high.end());
    cand.push_back(kInf);
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
    double best = 1.0;
    for (const double t : cand) {
        const auto low_hits = low.end() - std::lower_bound(low.begin(), low.end(), t);
        const auto high_miss = std::lower_bound(high.begin(), high.end(), t) - high.begin();
        const double err_low = static_cast<double>(low_hits) / static_cast<double>(low.size());
        const double err_high = static_cast<double>(high_miss) / static_cast<double>(high.size());
        best = std::min(best, std::max(err_low, err_high));
    }
    return best;
}

}  // namespace sketchlab
