#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "sketchlab/hashing.hpp"

namespace sketchlab {

// Deterministic experiment RNG. Only raw engine words are consumed; all
// derived draws are hand-rolled so byte-identical reruns hold on any platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(splitmix64(seed)) {}

    std::uint64_t u64() { return eng_(); }

    // Uniform strictly inside (0,1).
    double u01() { return u01_from_word(eng_()); }

    bool bernoulli(double p) { return u01() < p; }

    // Uniform index in [0, n).
    std::uint64_t below(std::uint64_t n) { return bounded_word(eng_(), n); }

    double uniform(double a, double b) { return a + (b - a) * u01(); }

    double exponential(double rate) { return -std::log1p(-u01()) / rate; }

private:
    std::mt19937_64 eng_;
};

// Independent child stream for (base, index); used for per-trial/per-query seeds.
inline std::uint64_t derive_stream(std::uint64_t base, std::uint64_t index) {
    return splitmix64(base ^ splitmix64(index + 0x9e3779b97f4a7c15ULL));
}

}  // namespace sketchlab
