#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sketchlab/errors.hpp"
#include "sketchlab/ground.hpp"
#include "sketchlab/keygen.hpp"
#include "sketchlab/qr.hpp"
#include "sketchlab/rank_domain.hpp"
#include "sketchlab/rng.hpp"
#include "sketchlab/sketch.hpp"
#include "sketchlab/stats.hpp"

using namespace sketchlab;

namespace {

GroundSet make_ground(SketchKind kind, std::uint32_t k, RegisterRepr repr,
                      std::size_t n, std::uint64_t seed = 7) {
    Rng kr(derive_stream(seed, 0));
    auto keys = generate_keys(n, 10, kr);
    SketchConfig cfg{kind, k, repr};
    return GroundSet(cfg, Seed{derive_stream(seed, 2), derive_stream(seed, 3)},
                     std::move(keys));
}

KeyMask full_mask(std::size_t n) { return KeyMask(n, 1); }

}  // namespace

TEST_SUITE("rank_domain") {

TEST_CASE("full-set rank sketch is all ones") {
    const std::size_t n = 2000;
    for (auto kind : {SketchKind::KMins, SketchKind::KPartition, SketchKind::BottomK}) {
        const GroundSet g = make_ground(kind, 16, RegisterRepr::FullPrecision, n);
        const RankSketch rs = rank_sketch(g, full_mask(n));
        REQUIRE(rs.y.size() == 16);
        for (auto y : rs.y) CHECK(y == 1);
    }
}

TEST_CASE("rank sketch of the full set reconstructs the full sketch") {
    const std::size_t n = 1500;
    const GroundSet g = make_ground(SketchKind::KMins, 8, RegisterRepr::FullPrecision, n);
    const RankSketch rs = rank_sketch(g, full_mask(n));
    CHECK(value_sketch_from_ranks(g, rs) == g.sketch_of_subset(full_mask(n)));
}

TEST_CASE("rank-domain view agrees with the value-domain subset sketch") {
    // The rank sketch of a subset, mapped back through the ground tables, must
    // be bit-identical to sketching the subset directly.
    const std::size_t n = 1200;
    const struct {
        SketchKind kind;
        RegisterRepr repr;
    } configs[] = {
        {SketchKind::KMins, RegisterRepr::FullPrecision},
        {SketchKind::BottomK, RegisterRepr::FullPrecision},
        {SketchKind::KPartition, RegisterRepr::FullPrecision},
        {SketchKind::KPartition, RegisterRepr::Hll8BitExponent},
    };
    for (const auto& c : configs) {
        CAPTURE(static_cast<int>(c.kind));
        const GroundSet g = make_ground(c.kind, 16, c.repr, n);
        Rng rng(42);
        KeyMask mask(n, 0);
        std::vector<std::uint32_t> members;
        int checked = 0;
        for (int trial = 0; trial < 60; ++trial) {
            members.clear();
            sample_members(n, rng.uniform(0.08, 0.9), rng, members);
            for (auto m : members) mask[m] = 1;
            try {
                const RankSketch rs = rank_sketch(g, mask);
                CHECK(value_sketch_from_ranks(g, rs) == g.sketch_of_subset(mask));
                ++checked;
            } catch (const StateError&) {
                // sparse draw left a table/part empty; draw again
            }
            for (auto m : members) mask[m] = 0;
        }
        CHECK(checked >= 45);
    }
}

TEST_CASE("incomplete subsets are rejected") {
    const std::size_t n = 500;
    SUBCASE("empty subset") {
        const GroundSet g = make_ground(SketchKind::KMins, 4, RegisterRepr::FullPrecision, n);
        KeyMask mask(n, 0);
        CHECK_THROWS_AS((void)rank_sketch(g, mask), StateError);
    }
    SUBCASE("bottom-k with fewer than k members") {
        const GroundSet g = make_ground(SketchKind::BottomK, 16, RegisterRepr::FullPrecision, n);
        KeyMask mask(n, 0);
        for (std::size_t i = 0; i < 15; ++i) mask[i] = 1;
        CHECK_THROWS_AS((void)rank_sketch(g, mask), StateError);
    }
    SUBCASE("partitioned sketch with an empty part") {
        const GroundSet g =
            make_ground(SketchKind::KPartition, 8, RegisterRepr::FullPrecision, n);
        KeyMask mask(n, 0);
        mask[0] = 1;  // a single key fills exactly one part
        CHECK_THROWS_AS((void)rank_sketch(g, mask), StateError);
    }
    SUBCASE("mask size must match the ground set") {
        const GroundSet g = make_ground(SketchKind::KMins, 4, RegisterRepr::FullPrecision, n);
        CHECK_THROWS_AS((void)rank_sketch(g, KeyMask(n + 1, 1)), ConfigError);
    }
}

TEST_CASE("rank vectors are validated before mapping to values") {
    const std::size_t n = 300;
    const GroundSet g = make_ground(SketchKind::KMins, 4, RegisterRepr::FullPrecision, n);
    RankSketch rs;
    rs.y = {1, 1, 1};  // one table short
    CHECK_THROWS_AS((void)value_sketch_from_ranks(g, rs), ConfigError);
    rs.y = {1, 0, 1, 1};
    CHECK_THROWS_AS((void)value_sketch_from_ranks(g, rs), ConfigError);
    rs.y = {1, 1, 1, n + 1};
    CHECK_THROWS_AS((void)value_sketch_from_ranks(g, rs), StateError);

    const GroundSet b = make_ground(SketchKind::BottomK, 8, RegisterRepr::FullPrecision, n);
    RankSketch gaps;
    gaps.y.assign(8, 1);
    gaps.y.back() = n;  // cumulative rank overruns the table
    CHECK_THROWS_AS((void)value_sketch_from_ranks(b, gaps), StateError);
}

TEST_CASE("ranks of random subsets follow the geometric law") {
    // At member rate q each register's rank is Geom[q], independent across
    // tables: mean k/q, variance k(1-q)/q^2, and a chi-square fit of the
    // pooled ranks against the geometric pmf must not reject.
    const GroundSet g = make_ground(SketchKind::KMins, 64, RegisterRepr::FullPrecision, 10000);
    const double q = 0.25;
    const GeomCheckReport rep = geom_distribution_check(g, q, 500, 20250815);
    CHECK(rep.trials == 500);
    CHECK(rep.chi.p_value > 0.01);
    CHECK(rep.expected_mean == doctest::Approx(256.0));
    CHECK(rep.expected_var == doctest::Approx(768.0));
    CHECK(std::abs(rep.mean_sum - rep.expected_mean) < 3.0 * rep.se_sum);
    CHECK(std::abs(rep.var_sum / rep.expected_var - 1.0) < 0.10);
    // Independence across registers: with 500 samples the null Spearman rho
    // has sd ~ 1/sqrt(499) ~ 0.045; the max over 2016 pairs stays below ~4.5 sd.
    CHECK(rep.max_abs_pairwise_rho < 0.20);
}

TEST_CASE("geom check at rate one is degenerate") {
    const GroundSet g = make_ground(SketchKind::KMins, 8, RegisterRepr::FullPrecision, 400);
    const GeomCheckReport rep = geom_distribution_check(g, 1.0, 50, 3);
    CHECK(rep.mean_sum == doctest::Approx(8.0));
    CHECK(rep.var_sum == doctest::Approx(0.0));
    CHECK(rep.chi.p_value == doctest::Approx(1.0));  // single merged cell
}

TEST_CASE("geom check rejects bad parameters") {
    const GroundSet g = make_ground(SketchKind::KMins, 4, RegisterRepr::FullPrecision, 200);
    CHECK_THROWS_AS((void)geom_distribution_check(g, 0.0, 100, 1), ConfigError);
    CHECK_THROWS_AS((void)geom_distribution_check(g, 1.5, 100, 1), ConfigError);
    CHECK_THROWS_AS((void)geom_distribution_check(g, 0.5, 1, 1), ConfigError);
}

TEST_CASE("continuous ranks round up to integer ranks") {
    CHECK(continuous_to_rank(std::vector<double>{}).empty());
    const std::vector<double> in{0.0, 0.9, 2.5, 2.0};
    const std::vector<std::uint64_t> want{1, 1, 3, 3};
    CHECK(continuous_to_rank(in) == want);
    const std::vector<double> bad{0.5, -0.1};
    CHECK_THROWS_AS((void)continuous_to_rank(bad), ConfigError);
}

TEST_CASE("exponential draws map to geometric ranks") {
    // Y' ~ Exp(-ln(1-q)) implies floor(Y')+1 ~ Geom[q]; checked at q = 1/2.
    const double q = 0.5;
    const double rate = -std::log1p(-q);
    Rng rng(99);
    std::vector<double> yprime(200000);
    for (auto& v : yprime) v = rng.exponential(rate);
    const auto ranks = continuous_to_rank(yprime);
    const std::size_t cells = 18;
    std::vector<double> obs(cells, 0.0), exp(cells, 0.0);
    for (auto r : ranks) obs[std::min<std::size_t>(r - 1, cells - 1)] += 1.0;
    double tail = 1.0;
    const double total = static_cast<double>(ranks.size());
    for (std::size_t t = 0; t + 1 < cells; ++t) {
        const double p = q * std::pow(1.0 - q, static_cast<double>(t));
        exp[t] = total * p;
        tail -= p;
    }
    exp[cells - 1] = total * tail;
    CHECK(chi_square_gof(obs, exp).p_value > 0.005);
}

TEST_CASE("key partition separates low-rank keys from transparent ones") {
    const std::size_t n = 2000;
    const std::uint32_t k = 4;
    const GroundSet g = make_ground(SketchKind::KMins, k, RegisterRepr::FullPrecision, n);
    const double q_a = 0.1, delta_c = 0.01;
    const KeyPartition part = partition_keys(g, q_a, delta_c);
    CHECK(part.q_a == q_a);
    CHECK(part.delta_c == delta_c);

    const auto prefix =
        static_cast<std::size_t>(std::ceil(std::log(1.0 / delta_c) / q_a));  // 47
    CHECK(part.n0_size > 0);
    CHECK(part.n0_size <= k * prefix);
    CHECK(part.n0_star_size <= k);

    std::size_t transparent_count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        CHECK(part.transparent[i] == (part.n0[i] ? 0 : 1));
        transparent_count += part.transparent[i];
        if (part.n0_star[i]) CHECK(part.n0[i] == 1);  // determining keys are low-rank
    }
    CHECK(transparent_count + part.n0_size == n);

    // The determining keys alone reproduce the full-set sketch.
    CHECK(g.sketch_of_subset(part.n0_star) == g.sketch_of_subset(full_mask(n)));
}

TEST_CASE("transparent keys are almost never the examined register key") {
    // At member rate q_a, a key outside the low-rank prefix supplies a register
    // with probability at most k * q_a * (1-q_a)^depth <= k * q_a * delta_c.
    const std::size_t n = 2000;
    const std::uint32_t k = 4;
    const GroundSet g = make_ground(SketchKind::KMins, k, RegisterRepr::FullPrecision, n);
    const double q_a = 0.1, delta_c = 0.01;
    const KeyPartition part = partition_keys(g, q_a, delta_c);

    const std::size_t trials = 20000;
    Rng rng(31);
    std::vector<std::uint32_t> members;
    KeyMask mask(n, 0);
    std::vector<std::uint32_t> examined(n, 0);
    for (std::size_t t = 0; t < trials; ++t) {
        members.clear();
        sample_members(n, q_a, rng, members);
        for (auto m : members) mask[m] = 1;
        for (std::size_t tab = 0; tab < k; ++tab) {
            const std::uint32_t p = g.first_member(tab, mask);
            if (p != kNoPos) ++examined[g.key_at(tab, p)];
        }
        for (auto m : members) mask[m] = 0;
    }
    // Bound ~ 4 * 0.1 * 0.01 * trials = 80 expected worst case; allow 8 sd.
    const double cap = static_cast<double>(trials) * 0.006;
    for (std::size_t i = 0; i < n; ++i)
        if (part.transparent[i]) CHECK(static_cast<double>(examined[i]) < cap);
    // Contrast: every determining key is examined whenever it is sampled.
    for (std::size_t i = 0; i < n; ++i)
        if (part.n0_star[i])
            CHECK(static_cast<double>(examined[i]) >
                  0.5 * q_a * static_cast<double>(trials));
}

TEST_CASE("bottom-k partition takes a prefix of the global rank order") {
    const std::size_t n = 2000;
    const GroundSet g = make_ground(SketchKind::BottomK, 16, RegisterRepr::FullPrecision, n);
    const KeyPartition part = partition_keys(g, 0.1, 0.01);
    const auto prefix = static_cast<std::size_t>(
        std::ceil(16.0 * std::log(100.0) / 0.1));  // k * ln(1/delta_c) / q_a
    CHECK(part.n0_size == std::min(prefix, n));
    CHECK(part.n0_star_size == 16);
    for (std::uint32_t p = 0; p < 16; ++p) CHECK(part.n0[g.key_at(0, p)] == 1);
}

TEST_CASE("key partition rejects bad parameters and tiny grounds") {
    const GroundSet g = make_ground(SketchKind::KMins, 4, RegisterRepr::FullPrecision, 200);
    CHECK_THROWS_AS((void)partition_keys(g, 0.0, 0.01), ConfigError);
    CHECK_THROWS_AS((void)partition_keys(g, 1.0, 0.01), ConfigError);
    CHECK_THROWS_AS((void)partition_keys(g, 0.1, 0.0), ConfigError);
    CHECK_THROWS_AS((void)partition_keys(g, 0.1, 1.0), ConfigError);
    // depth ~ 461 per table exceeds n = 200: every key becomes low-rank.
    const GroundSet tiny = make_ground(SketchKind::KMins, 4, RegisterRepr::FullPrecision, 200);
    CHECK_THROWS_AS((void)partition_keys(tiny, 0.01, 0.01), StateError);
}

TEST_CASE("register ranks are exchangeable given their sum") {
    // Condition on the total rank falling in a narrow band; the first and last
    // registers' ranks must then be indistinguishable (Mann-Whitney).
    const std::size_t n = 4000;
    const GroundSet g = make_ground(SketchKind::KMins, 16, RegisterRepr::FullPrecision, n);
    const double q = 0.15;
    Rng rng(555);
    std::vector<std::uint32_t> members;
    KeyMask mask(n, 0);
    std::vector<double> sums;
    std::vector<std::pair<double, double>> firstlast;
    for (int t = 0; t < 6000; ++t) {
        members.clear();
        sample_members(n, q, rng, members);
        for (auto m : members) mask[m] = 1;
        const RankSketch rs = rank_sketch(g, mask);
        for (auto m : members) mask[m] = 0;
        double s = 0.0;
        for (auto y : rs.y) s += static_cast<double>(y);
        sums.push_back(s);
        firstlast.emplace_back(static_cast<double>(rs.y.front()),
                               static_cast<double>(rs.y.back()));
    }
    std::vector<double> sorted = sums;
    std::sort(sorted.begin(), sorted.end());
    const double lo = quantile_sorted(sorted, 0.45), hi = quantile_sorted(sorted, 0.55);
    std::vector<double> a, b;
    for (std::size_t i = 0; i < sums.size(); ++i) {
        if (sums[i] >= lo && sums[i] <= hi) {
            a.push_back(firstlast[i].first);
            b.push_back(firstlast[i].second);
        }
    }
    REQUIRE(a.size() >= 200);
    CHECK(std::abs(mann_whitney_z(a, b)) < 3.5);
}

TEST_CASE("rank prefix depth formula") {
    CHECK(rank_prefix_depth(1024.0, 64.0) == doctest::Approx(26.0));
    CHECK(rank_prefix_depth(1.0, 1.0) == doctest::Approx(10.0));
}

}  // TEST_SUITE
