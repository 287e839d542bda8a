#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace sketchlab {

double mean(std::span<const double> xs);
double sample_variance(std::span<const double> xs);

// Type-7 (linear interpolation) quantile of an ascending-sorted sample.
double quantile_sorted(std::span<const double> sorted, double p);

// Kolmogorov-Smirnov statistic of an ascending-sorted sample vs U(0,1).
double ks_uniform(std::span<const double> sorted);

struct ChiSquareResult {
    double statistic = 0.0;
    std::size_t df = 0;
    double p_value = 1.0;
};

// Goodness of fit with adjacent-cell merging until every expected count >= 5.
ChiSquareResult chi_square_gof(std::span<const double> observed,
                               std::span<const double> expected);

// 1-based ranks with ties sharing their average rank.
std::vector<double> rank_transform(std::span<const double> xs);

// Spearman rank correlation (average ranks on ties).
double spearman_rho(std::span<const double> xs, std::span<const double> ys);

// Mann-Whitney two-sample z statistic, normal approximation with tie correction.
double mann_whitney_z(std::span<const double> a, std::span<const double> b);

// Standard normal survival function.
double normal_sf(double z);

}  // namespace sketchlab
