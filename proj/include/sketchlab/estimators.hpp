#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "sketchlab/sketch.hpp"

namespace sketchlab {

enum class EstimatorKind { StandardKMins, StandardBottomK, HllHybrid };

struct Estimate {
    double value = 0.0;
    bool t_zero = false;       // statistic was 0; value is the +inf sentinel
    bool exact_small = false;  // BottomK below capacity: value is the exact count
};

// Sufficient statistic T(S): register sum (KMins / full-precision KPartition)
// or the k-th smallest stored priority (BottomK; underflow -> StateError).
// Undefined for exponent registers (ConfigError).
double statistic(const Sketch& s);

// (k-1)/T for the standard estimators; linear-counting/harmonic hybrid for HLL.
Estimate estimate(const Sketch& s, EstimatorKind kind);

// Attack-facing oracle value 1/estimate.
double inverse_estimate(const Sketch& s, EstimatorKind kind);

double hll_alpha(std::uint32_t k);

// Hybrid linear-counting / harmonic-mean estimate over raw exponent registers
// (k = span length); the sketch-level HllHybrid estimator delegates here.
double hll_estimate_from_exponents(std::span<const std::uint8_t> exponents);

// KPartition exponent-register config with k = ceil(1.04/eps^2); 0 < eps <= 1.
SketchConfig hll_config_from_epsilon(double epsilon);

struct ErrorReport {
    double nrmse = 0.0;
    double q50 = 0.0, q90 = 0.0, q99 = 0.0;  // quantiles of |relative error|
    double mean_estimate = 0.0;
    std::size_t trials = 0;

    std::string csv_header() const;
    std::string csv_row(const SketchConfig& cfg, std::size_t cardinality) const;
};

// NRMSE and |relative error| quantiles over fresh seeds at a fixed cardinality.
ErrorReport measure_error(const SketchConfig& config, EstimatorKind kind,
                          std::size_t cardinality, std::size_t trials,
                          std::uint64_t base_seed);

}  // namespace sketchlab
