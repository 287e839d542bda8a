#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "sketchlab/ground.hpp"
#include "sketchlab/rng.hpp"

namespace sketchlab {

enum class QrStrategy { ReferenceThreshold, SymmetricThreshold, ComponentRestricted };

// A soft-threshold cardinality query responder: answer 0 for sets of size <= A
// and 1 for sizes >= 2A, each with error probability <= delta.
struct QrConfig {
    QrStrategy strategy = QrStrategy::ReferenceThreshold;
    double A = 1.0;
    double delta = 0.0;              // default 0.5/sqrt(k)
    std::uint32_t k_prime = 0;       // ComponentRestricted: first k' registers
    double failure_threshold = 0.0;  // default log2(k)/2 live registers

    static QrConfig make(QrStrategy strategy, double A, std::uint32_t k,
                         std::uint32_t k_prime = 0);
};

struct QrResponse {
    int z = 0;
    bool failed = false;          // too few live registers for any correct map
    std::uint32_t effective_k = 0;
    double score = 0.0;           // estimate (Reference) or sum-of-ranks (others)
};

// A query's sampling descriptor: Bern(rate) membership over the ground keys,
// reproducible from the stream seed. Batches of these form the sealed input of
// the single-batch attacks (all draws fixed before any response is computed).
struct QueryDraw {
    std::uint64_t stream = 0;
    double rate = 0.5;
};

// Appends the Bern(rate) member indices of {0,...,n-1} in ascending order.
void sample_members(std::size_t n, double rate, Rng& rng, std::vector<std::uint32_t>& out);

// One QR interaction session: a strategy plus the mask accumulated so far.
// Every query U is evaluated as V = U (union) mask; registers whose V-minimum
// is contributed by a mask key are dead, the rest are live.
class QuerySession {
public:
    QuerySession(const GroundSet& ground, QrConfig config);

    const GroundSet& ground() const { return g_; }
    const QrConfig& config() const { return cfg_; }
    const KeyMask& mask() const { return mask_; }
    std::size_t mask_size() const { return mask_size_; }
    void mask_add(std::uint32_t key);

    // Live registers against the full ground set under the current mask.
    std::uint32_t effective_k_of_mask() const;

    QrResponse respond(const KeyMask& query) const;
    std::vector<QrResponse> respond_batch(std::span<const QueryDraw> draws) const;

private:
    const GroundSet& g_;
    QrConfig cfg_;
    KeyMask mask_;
    std::size_t mask_size_ = 0;
    std::vector<std::uint32_t> mask_first_;  // per table, first masked position

    QrResponse respond_scan(const KeyMask& query) const;
};

// Registers of the union's sketch not determined by mask keys alone; the union
// defaults to the full ground set when no sketch is supplied.
std::uint32_t effective_registers(const GroundSet& ground, const KeyMask& mask,
                                  const Sketch* union_sketch = nullptr);

struct BucketRate {
    std::size_t cardinality = 0;
    double rate_z1 = 0.0;
    std::size_t trials = 0;
};

struct CorrectnessAudit {
    std::vector<BucketRate> buckets;
    double worst_low = 0.0;   // max P[z=1] over buckets with c < A
    double worst_high = 0.0;  // max P[z=0] over buckets with c > 2A
};

// Monte Carlo correctness audit. Per cardinality c, queries are uniform
// c-subsets of the ground keys; with `forced_union`, queries are that set plus
// a uniform (c - |forced|)-subset of the rest, modeling audits of M (union) U.
CorrectnessAudit audit_correctness(const std::function<int(const KeyMask&)>& respond_fn,
                                   const GroundSet& ground, double A,
                                   std::span<const std::size_t> cardinalities,
                                   std::size_t trials_per_bucket, std::uint64_t rng_seed,
                                   const KeyMask* forced_union = nullptr);

// Audit cardinality grid: points strictly below A and strictly above 2A.
std::vector<std::size_t> default_audit_grid(double A, std::size_t n);

// Minimum over thresholds t of max(P[low >= t], P[high < t]) for a map that
// answers 1 iff score >= t; used to certify that no threshold map is correct.
double best_threshold_error(std::span<const double> low_scores,
                            std::span<const double> high_scores);

}  // namespace sketchlab
