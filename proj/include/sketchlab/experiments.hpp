#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sketchlab/attacks.hpp"

namespace sketchlab {

enum class ExperimentKind {
    QuerySweep,
    SizeSweep,
    StandardTheorem,
    SymmetricTheorem,
    AdaptiveTheorem,
    EstimatorNrmse,
};

struct ExperimentSpec {
    ExperimentKind kind = ExperimentKind::QuerySweep;
    std::optional<double> epsilon;   // exactly one of epsilon / k
    std::optional<std::uint32_t> k;
    std::size_t n = 0;               // 0 = experiment default
    std::optional<std::int64_t> r;
    std::size_t trials = 0;          // EstimatorNrmse only; 0 = default
    std::vector<std::uint64_t> seeds;
    std::string out_dir;             // empty = no files written
    enum class Format { Csv, Svg, Both } format = Format::Both;
    std::size_t key_len = 10;

    void validate() const;  // throws ConfigError
};

struct CurvePoint {
    std::string direction;  // "ascending" | "descending"
    std::uint32_t k = 0;
    std::int64_t r = 0;
    std::uint64_t seed = 0;
    std::size_t prefix_size = 0;
    std::size_t true_size = 0;
    double estimate = 0.0;
    double ratio = 0.0;
};

// Prefix-estimate curves (50 evenly spaced prefix sizes from k to n) of an
// attack ordering, in both score directions.
std::vector<CurvePoint> attack_prefix_curves(const GroundSet& ground,
                                             const AttackResult& result,
                                             EstimatorKind estimator, std::int64_t r,
                                             std::uint64_t seed);

struct StandardTheoremRun {
    std::uint64_t seed = 0;
    std::size_t prefix_size = 0;
    double estimate = 0.0;
    double ratio = 0.0;
    bool pass = false;  // ratio >= 3
};

struct SymmetricTheoremRun {
    std::uint64_t seed = 0;
    bool registers_equal = false;       // S(M) == S(N)
    bool out_component_equal = true;    // equality on out-of-component registers
    std::size_t mask_size = 0;
    double masking_degree = 0.0;
    bool pass = false;
};

struct AdaptiveTheoremRun {
    std::uint64_t seed = 0;
    std::optional<std::size_t> failed_at;
    double audit_worst = 0.0;  // worst bucket error of the post-attack audit
    double three_delta = 0.0;
    bool transparent_in_mask = false;
    std::size_t mask_size = 0;
    bool pass = false;
};

// One seed of the ordering-attack bias check: KMins, Bern(1/2) batch of r
// queries, ratio = estimate/true on the alpha*n lowest-score prefix.
StandardTheoremRun run_standard_theorem(std::uint32_t k, std::size_t n, std::int64_t r,
                                        double alpha, std::uint64_t seed);

// One seed of the single-batch mask attack against a symmetric or component
// restricted QR (A = n/16); pass = S(M)==S(N) and |M| <= alpha*n (symmetric),
// or out-of-component registers differ (component-restricted).
SymmetricTheoremRun run_symmetric_theorem(std::uint32_t k, std::size_t n, std::int64_t r,
                                          double alpha, std::uint64_t seed,
                                          QrStrategy strategy,
                                          AttackResult* out_result = nullptr);

// One seed of the adaptive attack against the mask-aware reference QR
// (A = n/16); pass = QR failure or post-attack audit error > 3*delta, with no
// transparent key ever masked.
AdaptiveTheoremRun run_adaptive_theorem(std::uint32_t k, std::size_t n, std::int64_t r,
                                        std::uint64_t seed, AttackResult* out_result = nullptr);

// Default ground-set size n = 16 k ceil(ln(k r)) of the mask-attack theorems.
std::size_t default_theorem_n(std::uint32_t k, std::int64_t r);

// Executes spec, writes CSV/SVG under spec.out_dir.
// Exit codes: 0 ok, 1 theorem-check gate failed, 2 I/O or config error.
int run_experiment(const ExperimentSpec& spec);

}  // namespace sketchlab
