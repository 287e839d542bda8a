#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sketchlab/estimators.hpp"
#include "sketchlab/qr.hpp"
#include "sketchlab/rank_domain.hpp"

namespace sketchlab {

struct ScoreBoard {
    std::vector<std::uint64_t> t;  // inclusion counts
    std::vector<double> c;         // accumulated oracle values / vote sums
};

struct TranscriptRow {
    std::size_t step = 0;
    std::size_t query_size = 0;
    double q = 0.0;
    double z_or_t = 0.0;
    std::size_t mask_size = 0;
    std::uint32_t effective_k = 0;
    double median_score = 0.0;
};

struct AttackResult {
    std::vector<std::uint32_t> ordering;  // keys by ascending average score
    std::vector<double> avg_score;        // aligned with ordering
    ScoreBoard scores;
    KeyMask mask;
    std::vector<std::size_t> mask_added_at;  // step per key, 0 = never
    std::size_t mask_count = 0;
    std::optional<std::size_t> failed_at;
    std::size_t unscored_keys = 0;  // placed last with a warning
    std::vector<TranscriptRow> transcript;
};

// Rate sampler for the query distribution D0: with w = n/(2A), draws
// q = 1/U[w*_a, w*_b] where w*_a = w/2 + U[0, w/4] and w*_b = w*_a + (7/4)w.
// Always inside [2/(5w), 2/w].
double sample_rate(double A, std::size_t n, Rng& rng);

// Sealed-batch statistic oracle: one call maps the whole batch of query draws
// to values, so no query can depend on any response.
using BatchOracle = std::function<std::vector<double>(const GroundSet&, std::span<const QueryDraw>)>;

// Oracle returning 1/estimate per query, evaluated through the rank tables.
BatchOracle inverse_estimate_oracle(EstimatorKind kind);

// Score-and-order attack on an unprotected estimate oracle: r Bern(1/2)
// queries, per-key average oracle values, keys ordered ascending.
AttackResult run_standard_attack(const BatchOracle& oracle, const GroundSet& ground,
                                 std::int64_t r, Rng& rng);

enum class SetDirection { Prefix, Suffix };

// The ceil(fraction*n) first (lowest-score) or last keys of an ordering.
std::vector<std::uint32_t> adversarial_set(const AttackResult& result, double fraction,
                                           SetDirection direction);

struct BiasReport {
    double beta = 0.0;            // (k/|U|) / T(S(U)): >1 biased up, <1 down
    double estimate_ratio = 0.0;  // estimate / |U|
};

// Bias of the sketch statistic on a chosen subset.
BiasReport measure_bias(const SketchConfig& config, const Seed& seed,
                        std::span<const std::string> subset_keys, EstimatorKind kind);

// Single-batch mask-building attack against a symmetric (or component
// restricted) QR: r rate-sampled queries, votes C[x] += z, mask = keys with
// C[x] > median(C) + sqrt(r ln(200 n r) / 2).
AttackResult single_batch_attack(const QuerySession& session, std::int64_t r, Rng& rng);

// Adaptive mask-building attack: query i is M (union) U_i, and any key with
// C[x] >= median(C[N\M]) + sqrt(i ln(200 n r) / 2) moves into M immediately;
// stops at QR failure or after r steps.
AttackResult adaptive_attack(QuerySession& session, std::int64_t r, Rng& rng);

struct MaskReport {
    bool registers_equal = false;  // S(mask) == S(ground) bit comparison
    double masking_degree = 0.0;   // mean of 1 - effective_registers/k over D0
    double mask_fraction = 0.0;    // |mask| / n
};

MaskReport verify_mask(const GroundSet& ground, const KeyMask& mask, double A,
                       std::size_t trials, std::uint64_t rng_seed);

// Transcript CSV (step,query_size,q,z_or_T,mask_size,effective_k,median_score)
// and newline-delimited mask key export.
void write_transcript_csv(const std::string& path, std::span<const TranscriptRow> rows);
void write_mask_keys(const std::string& path, const GroundSet& ground, const KeyMask& mask);

}  // namespace sketchlab
