#include "sketchlab/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <limits>
#include <numeric>

#include "sketchlab/csvio.hpp"
#include "sketchlab/errors.hpp"

namespace sketchlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Long runs keep every masking/failure step but thin the routine rows.
std::size_t transcript_stride(std::int64_t r) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(r) / 65536);
}

// Exact running median and maximum of a population of small nonnegative
// integer scores under single increments and removals.
struct MedianTracker {
    std::vector<std::uint32_t> freq;
    std::size_t count = 0;  // population size
    std::size_t med = 0;    // candidate median value
    std::size_t below = 0;  // values strictly under med
    std::size_t max = 0;    // largest value present

    MedianTracker(std::size_t max_value, std::size_t population)
        : freq(max_value + 2, 0), count(population) {
        freq[0] = static_cast<std::uint32_t>(population);
    }

    void increment(std::size_t v) {  // one member moves v -> v+1
        --freq[v];
        ++freq[v + 1];
        if (v + 1 == med) --below;
        if (v + 1 > max) max = v + 1;
    }

    void remove(std::size_t v) {  // one member leaves the population
        --freq[v];
        --count;
        if (v < med) --below;
        while (max > 0 && freq[max] == 0) --max;
    }

    std::size_t median() {  // lower median; undefined when count == 0
        const std::size_t target = (count + 1) / 2;
        while (below >= target) {
            --med;
            below -= freq[med];
        }
        while (below + freq[med] < target) {
            below += freq[med];
            ++med;
        }
        return med;
    }
};

}  // namespace

double sample_rate(double A, std::size_t n, Rng& rng) {
    if (!(A > 0.0) || 2.0 * A > static_cast<double>(n))
        throw ConfigError("rate sampler needs 0 < 2A <= n");
    const double w = static_cast<double>(n) / (2.0 * A);
    const double d = rng.uniform(0.0, w / 4.0);
    const double wa = w / 2.0 + d;
    const double wb = wa + 1.75 * w;
    return 1.0 / rng.uniform(wa, wb);
}

BatchOracle inverse_estimate_oracle(EstimatorKind kind) {
    return [kind](const GroundSet& g, std::span<const QueryDraw> draws) {
        const auto& sc = g.config();
        switch (kind) {
            case EstimatorKind::StandardKMins:
                if (sc.kind != SketchKind::KMins || sc.repr != RegisterRepr::FullPrecision)
                    throw ConfigError("StandardKMins oracle needs a full-precision KMins ground set");
                break;
            case EstimatorKind::StandardBottomK:
                if (sc.kind != SketchKind::BottomK)
                    throw ConfigError("StandardBottomK oracle needs a BottomK ground set");
                break;
            case EstimatorKind::HllHybrid:
                if (sc.kind != SketchKind::KPartition || sc.repr != RegisterRepr::Hll8BitExponent)
                    throw ConfigError("HllHybrid oracle needs a KPartition exponent ground set");
                break;
        }
        std::vector<double> out;
        out.reserve(draws.size());
        KeyMask query(g.n(), 0);
        std::vector<std::uint32_t> members;
        std::vector<std::uint8_t> exps(kind == EstimatorKind::HllHybrid ? sc.k : 0);
        for (const auto& d : draws) {
            members.clear();
            Rng rng(d.stream);
            sample_members(g.n(), d.rate, rng, members);
            for (auto m : members) query[m] = 1;
            double est = 0.0;
            if (members.empty()) {
                // Empty query: nothing gets scored, the value is never read.
            } else if (kind == EstimatorKind::StandardKMins) {
                double t = 0.0;
                for (std::size_t tab = 0; tab < g.table_count(); ++tab)
                    t += g.value_at(tab, g.first_member(tab, query));
                est = t > 0.0 ? static_cast<double>(sc.k - 1) / t : kInf;
            } else if (kind == EstimatorKind::StandardBottomK) {
                const std::size_t sz = g.table_size(0);
                std::uint32_t found = 0;
                double last = -1.0;
                double t = 0.0;
                for (std::uint32_t p = 0; p < sz; ++p) {
                    if (!query[g.key_at(0, p)]) continue;
                    const double u = g.uniform_at(0, p);
                    if (u == last) continue;
                    last = u;
                    ++found;
                    if (found == sc.k) {
                        t = u;
                        break;
                    }
                }
                est = found == sc.k ? static_cast<double>(sc.k - 1) / t
                                    : static_cast<double>(found);
            } else {
                std::fill(exps.begin(), exps.end(), 0);
                for (std::size_t tab = 0; tab < g.table_count(); ++tab) {
                    const auto p = g.first_member(tab, query);
                    if (p != kNoPos) exps[tab] = g.exponent_at(tab, p);
                }
                est = hll_estimate_from_exponents(exps);
            }
            out.push_back(est > 0.0 && std::isfinite(est) ? 1.0 / est : 0.0);
            for (auto m : members) query[m] = 0;
        }
        return out;
    };
}

AttackResult run_standard_attack(const BatchOracle& oracle, const GroundSet& ground,
                                 std::int64_t r, Rng& rng) {
    if (r <= 0) throw ConfigError("the score-and-order attack needs r >= 1");
    const std::size_t n = ground.n();

    std::vector<QueryDraw> draws(static_cast<std::size_t>(r));
    for (auto& d : draws) d = QueryDraw{rng.u64(), 0.5};
    const std::vector<double> values = oracle(ground, draws);  // one sealed batch
    if (values.size() != draws.size()) throw StateError("oracle returned a short batch");

    AttackResult res;
    res.scores.t.assign(n, 0);
    res.scores.c.assign(n, 0.0);
    res.mask.assign(n, 0);
    res.mask_added_at.assign(n, 0);

    const std::size_t stride = transcript_stride(r);
    std::vector<std::uint32_t> members;
    for (std::size_t i = 0; i < draws.size(); ++i) {
        members.clear();
        Rng qrng(draws[i].stream);
        sample_members(n, draws[i].rate, qrng, members);
        for (auto x : members) {
            ++res.scores.t[x];
            res.scores.c[x] += values[i];
        }
        if ((i + 1) % stride == 0 || i + 1 == draws.size()) {
            TranscriptRow row;
            row.step = i + 1;
            row.query_size = members.size();
            row.q = draws[i].rate;
            row.z_or_t = values[i];
            row.effective_k = ground.config().k;
            res.transcript.push_back(row);
        }
    }

    std::vector<double> avg(n, 0.0);
    for (std::size_t x = 0; x < n; ++x) {
        if (res.scores.t[x] == 0) {
            avg[x] = kInf;  // never queried: sorts last
            ++res.unscored_keys;
        } else {
            avg[x] = res.scores.c[x] / static_cast<double>(res.scores.t[x]);
        }
    }
    if (res.unscored_keys > 0)
        std::cerr << "warning: " << res.unscored_keys
                  << " keys appeared in no query; placed last in the ordering\n";

    res.ordering.resize(n);
    std::iota(res.ordering.begin(), res.ordering.end(), 0u);
    std::stable_sort(res.ordering.begin(), res.ordering.end(),
                     [&](std::uint32_t a, std::uint32_t b) {
                         if (avg[a] != avg[b]) return avg[a] < avg[b];
                         return ground.key(a) < ground.key(b);
                     });
    res.avg_score.resize(n);
    for (std::size_t i = 0; i < n; ++i) res.avg_score[i] = avg[res.ordering[i]];
    return res;
}

std::vector<std::uint32_t> adversarial_set(const AttackResult& result, double fraction,
                                           SetDirection direction) {
    if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("fraction must lie in (0, 1]");
    const std::size_t n = result.ordering.size();
    const auto take = std::min(n, static_cast<std::size_t>(
                                      std::ceil(fraction * static_cast<double>(n))));
    if (direction == SetDirection::Prefix)
        return {result.ordering.begin(), result.ordering.begin() + take};
    return {result.ordering.end() - take, result.ordering.end()};
}

BiasReport measure_bias(const SketchConfig& config, const Seed& seed,
                        std::span<const std::string> subset_keys, EstimatorKind kind) {
    if (config.repr == RegisterRepr::Hll8BitExponent)
        throw ConfigError("bias is defined through the sum statistic; use full precision");
    if (subset_keys.empty()) throw ConfigError("bias needs a nonempty subset");
    const Sketch s = Sketch::of_set(config, seed, subset_keys);
    const double t = statistic(s);
    const double size = static_cast<double>(subset_keys.size());
    BiasReport rep;
    rep.beta = t > 0.0 ? (static_cast<double>(config.k) / size) / t : kInf;
    rep.estimate_ratio = estimate(s, kind).value / size;
    return rep;
}

AttackResult single_batch_attack(const QuerySession& session, std::int64_t r, Rng& rng) {
    if (r < 0) throw ConfigError("r must be nonnegative");
    if (session.config().strategy == QrStrategy::ReferenceThreshold)
        throw ConfigError("the vote attack targets symmetric or component-restricted QR");
    const GroundSet& g = session.ground();
    const std::size_t n = g.n();

    AttackResult res;
    res.scores.t.assign(n, 0);
    res.scores.c.assign(n, 0.0);
    res.mask.assign(n, 0);
    res.mask_added_at.assign(n, 0);
    if (r == 0) return res;

    std::vector<QueryDraw> draws(static_cast<std::size_t>(r));
    for (auto& d : draws)
        d = QueryDraw{rng.u64(), sample_rate(session.config().A, n, rng)};
    const auto responses = session.respond_batch(draws);  // one sealed batch

    const std::size_t stride = transcript_stride(r);
    std::vector<std::uint32_t> members;
    for (std::size_t i = 0; i < draws.size(); ++i) {
        members.clear();
        Rng qrng(draws[i].stream);
        sample_members(n, draws[i].rate, qrng, members);
        for (auto x : members) {
            ++res.scores.t[x];
            res.scores.c[x] += static_cast<double>(responses[i].z);
        }
        if (responses[i].failed && !res.failed_at) res.failed_at = i + 1;
        if ((i + 1) % stride == 0 || i + 1 == draws.size()) {
            TranscriptRow row;
            row.step = i + 1;
            row.query_size = members.size();
            row.q = draws[i].rate;
            row.z_or_t = static_cast<double>(responses[i].z);
            row.effective_k = responses[i].effective_k;
            res.transcript.push_back(row);
        }
    }

    // Mask rule: C[x] > median(C) + sqrt(r ln(200 n r) / 2), strict.
    std::vector<double> sorted_c(res.scores.c);
    const std::size_t med_at = (n - 1) / 2;  // lower median
    std::nth_element(sorted_c.begin(), sorted_c.begin() + med_at, sorted_c.end());
    const double med = sorted_c[med_at];
    const double theta = std::sqrt(static_cast<double>(r) *
                                   std::log(200.0 * static_cast<double>(n) *
                                            static_cast<double>(r)) /
                                   2.0);
    for (std::uint32_t x = 0; x < n; ++x) {
        if (res.scores.c[x] > med + theta) {
            res.mask[x] = 1;
            res.mask_added_at[x] = static_cast<std::size_t>(r);
            ++res.mask_count;
        }
    }
    if (!res.transcript.empty()) {
        res.transcript.back().mask_size = res.mask_count;
        res.transcript.back().median_score = med;
    }
    return res;
}

AttackResult adaptive_attack(QuerySession& session, std::int64_t r, Rng& rng) {
    if (r < 0) throw ConfigError("r must be nonnegative");
    const GroundSet& g = session.ground();
    const std::size_t n = g.n();
    const double A = session.config().A;

    AttackResult res;
    res.scores.t.assign(n, 0);
    res.scores.c.assign(n, 0.0);
    res.mask_added_at.assign(n, 0);

    std::size_t population = 0;
    for (std::uint32_t x = 0; x < n; ++x)
        if (!session.mask()[x]) ++population;
    MedianTracker tracker(static_cast<std::size_t>(r), population);
    std::vector<std::uint32_t> votes(n, 0);
    const double log_term =
        std::log(200.0 * static_cast<double>(n) * static_cast<double>(std::max<std::int64_t>(r, 1)));
    const std::size_t stride = transcript_stride(r);

    KeyMask query(n, 0);
    std::vector<std::uint32_t> members;
    for (std::int64_t i = 1; i <= r; ++i) {
        const double rate = sample_rate(A, n, rng);
        members.clear();
        sample_members(n, rate, rng, members);
        for (auto m : members) query[m] = 1;
        const QrResponse resp = session.respond(query);
        for (auto m : members) query[m] = 0;

        TranscriptRow row;
        row.step = static_cast<std::size_t>(i);
        row.query_size = members.size();
        row.q = rate;
        row.z_or_t = static_cast<double>(resp.z);
        row.effective_k = resp.effective_k;

        if (resp.failed) {
            res.failed_at = static_cast<std::size_t>(i);
            row.mask_size = session.mask_size();
            row.median_score =
                tracker.count > 0 ? static_cast<double>(tracker.median()) : 0.0;
            res.transcript.push_back(row);
            break;
        }

        for (auto x : members) {
            if (session.mask()[x]) continue;  // masked keys stop scoring
            ++res.scores.t[x];
            if (resp.z == 1) {
                res.scores.c[x] += 1.0;
                tracker.increment(votes[x]);
                ++votes[x];
            }
        }

        // Step-i rule: C[x] >= median over unmasked keys + sqrt(i ln(200nr)/2).
        // The median is fixed once per step; all crossers move together.
        const std::size_t med = tracker.count > 0 ? tracker.median() : 0;
        const double thr = static_cast<double>(med) +
                           std::sqrt(static_cast<double>(i) * log_term / 2.0);
        bool masked_now = false;
        if (tracker.count > 0 && static_cast<double>(tracker.max) >= thr) {
            for (std::uint32_t x = 0; x < n; ++x) {
                if (session.mask()[x] || static_cast<double>(votes[x]) < thr) continue;
                session.mask_add(x);
                tracker.remove(votes[x]);
                res.mask_added_at[x] = static_cast<std::size_t>(i);
                ++res.mask_count;
                masked_now = true;
            }
        }
        if (masked_now || i % stride == 0 || i == r) {
            row.mask_size = session.mask_size();
            row.median_score = static_cast<double>(med);
            res.transcript.push_back(row);
        }
    }
    res.mask = session.mask();
    return res;
}

MaskReport verify_mask(const GroundSet& ground, const KeyMask& mask, double A,
                       std::size_t trials, std::uint64_t rng_seed) {
    if (mask.size() != ground.n()) throw ConfigError("mask size must equal n");
    const std::size_t n = ground.n();
    MaskReport rep;
    const auto mask_count = static_cast<std::size_t>(
        std::count(mask.begin(), mask.end(), std::uint8_t{1}));
    rep.mask_fraction = static_cast<double>(mask_count) / static_cast<double>(n);
    rep.registers_equal =
        ground.sketch_of_subset(mask) == ground.sketch_of_subset(KeyMask(n, 1));

    const double k = static_cast<double>(ground.config().k);
    Rng rng(rng_seed);
    KeyMask v = mask;
    std::vector<std::uint32_t> members;
    double degree_sum = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
        const double rate = sample_rate(A, n, rng);
        members.clear();
        sample_members(n, rate, rng, members);
        for (auto m : members) v[m] = 1;
        const Sketch union_sketch = ground.sketch_of_subset(v);
        degree_sum += 1.0 - static_cast<double>(
                                effective_registers(ground, mask, &union_sketch)) /
                                k;
        for (auto m : members) v[m] = mask[m];
    }
    rep.masking_degree = trials > 0 ? degree_sum / static_cast<double>(trials) : 0.0;
    return rep;
}

void write_transcript_csv(const std::string& path, std::span<const TranscriptRow> rows) {
    CsvWriter w({"step", "query_size", "q", "z_or_T", "mask_size", "effective_k",
                 "median_score"});
    for (const auto& row : rows) {
        w.add(static_cast<std::uint64_t>(row.step));
        w.add(static_cast<std::uint64_t>(row.query_size));
        w.add(row.q);
        w.add(row.z_or_t);
        w.add(static_cast<std::uint64_t>(row.mask_size));
        w.add(row.effective_k);
        w.add(row.median_score);
        w.end_row();
    }
    w.save(path);
}

void write_mask_keys(const std::string& path, const GroundSet& ground, const KeyMask& mask) {
    if (mask.size() != ground.n()) throw ConfigError("mask size must equal n");
    std::string text;
    for (std::uint32_t i = 0; i < ground.n(); ++i) {
        if (!mask[i]) continue;
        text += ground.key(i);
        text += '\n';
    }
    write_text_file(path, text);
}

}  // namespace sketchlab
