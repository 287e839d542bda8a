#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sketchlab/hashing.hpp"

namespace sketchlab {

enum class SketchKind : std::uint8_t { KMins = 0, BottomK = 1, KPartition = 2 };

enum class RegisterRepr : std::uint8_t { FullPrecision = 0, Hll8BitExponent = 1 };

struct SketchConfig {
    SketchKind kind = SketchKind::KMins;
    std::uint32_t k = 1;
    RegisterRepr repr = RegisterRepr::FullPrecision;

    void validate() const;  // throws ConfigError
    friend bool operator==(const SketchConfig&, const SketchConfig&) = default;
};

// Composable cardinality sketch. KMins keeps k per-hashmap minima, BottomK the
// k smallest priorities of a single hashmap, KPartition the per-part minimum
// (full precision) or the per-part 8-bit exponent. Full-precision registers are
// stored in uniform (0,1) space; the Exp[1] view is derived on demand (the two
// orders coincide, and this keeps bulk construction log-free).
class Sketch {
public:
    Sketch(SketchConfig config, Seed seed);

    static Sketch of_set(const SketchConfig& config, const Seed& seed,
                         std::span<const std::string> keys);

    void add(std::string_view key);
    void merge_from(const Sketch& other);  // throws IncompatibleError on mismatch
    static Sketch merged(const Sketch& a, const Sketch& b);

    const SketchConfig& config() const { return cfg_; }
    const Seed& seed() const { return seed_; }

    // Value-space registers: Exp[1] minima (+inf when empty) for KMins and
    // full-precision KPartition; the sorted uniform priorities for BottomK.
    std::vector<double> registers() const;
    const std::vector<std::uint8_t>& exponents() const;  // Hll8BitExponent only

    // Internal uniform-space registers (1.0 = empty part for KMins/KPartition).
    const std::vector<double>& raw_uniform() const { return u_; }

    std::size_t filled() const;  // registers holding at least one key

    // Rebuild from explicit register contents (validated).
    static Sketch from_uniform(const SketchConfig& config, const Seed& seed,
                               std::vector<double> uniform_regs);
    static Sketch from_values(const SketchConfig& config, const Seed& seed,
                              std::span<const double> value_regs);
    static Sketch from_exponents(const SketchConfig& config, const Seed& seed,
                                 std::vector<std::uint8_t> exponent_regs);

    void save(const std::string& path) const;
    static Sketch load(const std::string& path);

    bool operator==(const Sketch& other) const;

private:
    SketchConfig cfg_;
    Seed seed_;
    std::vector<std::uint64_t> dseeds_;  // derived per-hashmap PRF seeds
    std::vector<double> u_;              // uniform registers (see class comment)
    std::vector<std::uint8_t> e_;        // exponent registers, 0 = empty

    void add_word(std::uint32_t reg, std::uint64_t word);
    friend class GroundSet;
};

// The minimal subset whose sketch equals the whole set's sketch: per-hashmap /
// per-part argmin keys, or the k lowest-priority keys for BottomK. Ties break
// by (word, position in input).
std::vector<std::string> determining_keys(const SketchConfig& config, const Seed& seed,
                                          std::span<const std::string> keys);

}  // namespace sketchlab
