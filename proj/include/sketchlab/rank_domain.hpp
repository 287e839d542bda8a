#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sketchlab/ground.hpp"
#include "sketchlab/stats.hpp"

namespace sketchlab {

// Rank-domain representation: per table the rank of the lowest-rank subset
// member (KMins/KPartition), or the successive gaps of the bottom-k member
// ranks (BottomK). All entries are >= 1.
struct RankSketch {
    std::vector<std::uint64_t> y;
};

// Throws StateError when a table has no subset member (incomplete sketch) or,
// for BottomK, when fewer than k members exist.
RankSketch rank_sketch(const GroundSet& ground, const KeyMask& subset);

// Reconstructs the value-domain sketch of the subset from its ranks alone.
Sketch value_sketch_from_ranks(const GroundSet& ground, const RankSketch& ranks);

// Discretization Y = floor(Y') + 1 of continuous sketches; with Y' ~ Exp[q'],
// q' = -ln(1-q), the result is Geom[q]: Pr[Y=t] = q(1-q)^(t-1).
std::vector<std::uint64_t> continuous_to_rank(std::span<const double> yprime);

struct GeomCheckReport {
    ChiSquareResult chi;
    double mean_sum = 0.0;         // empirical E[sum Y]
    double se_sum = 0.0;           // standard error of mean_sum
    double expected_mean = 0.0;    // k/q
    double var_sum = 0.0;          // empirical Var[sum Y]
    double expected_var = 0.0;     // k(1-q)/q^2
    double max_abs_pairwise_rho = 0.0;
    std::size_t trials = 0;
};

// Samples rate-q subsets of the ground set and tests pooled register ranks
// against Geom[q], plus moment checks of sum Y and pairwise rank correlations.
GeomCheckReport geom_distribution_check(const GroundSet& ground, double q,
                                        std::size_t trials, std::uint64_t rng_seed);

struct KeyPartition {
    KeyMask n0;        // low-rank keys (examined with prob >= delta_c at rate q_a)
    KeyMask n0_star;   // determining keys of the full ground set
    KeyMask transparent;
    std::size_t n0_size = 0;
    std::size_t n0_star_size = 0;
    double q_a = 0.0;
    double delta_c = 0.0;
};

// Rank-prefix construction: per-table ranks <= ceil(ln(1/delta_c)/q_a), or the
// first ceil(k ln(1/delta_c)/q_a) ranks for BottomK. Throws StateError when
// the prefix swallows the whole ground set.
KeyPartition partition_keys(const GroundSet& ground, double q_a, double delta_c);

// Rank-prefix depth L = log2(rk) + 10 used by the distribution lemma's bound.
double rank_prefix_depth(double r, double k);

}  // namespace sketchlab
