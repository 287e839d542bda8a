#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "sketchlab/sketch.hpp"

namespace sketchlab {

using KeyMask = std::vector<std::uint8_t>;  // membership flags over ground keys

inline constexpr std::uint32_t kNoPos = std::numeric_limits<std::uint32_t>::max();

// A fixed universe of distinct keys with precomputed rank tables: per hashmap
// (KMins), per part (KPartition) or globally (BottomK), key indices sorted
// ascending by hash word. Rank j = position j-1. The word order refines both
// register orders: the rank-1 key carries the minimal priority and the maximal
// exponent, so value- and rank-domain views of a subset always agree.
class GroundSet {
public:
    GroundSet(SketchConfig config, Seed seed, std::vector<std::string> keys);

    const SketchConfig& config() const { return cfg_; }
    const Seed& seed() const { return seed_; }
    std::size_t n() const { return keys_.size(); }
    const std::vector<std::string>& keys() const { return keys_; }
    const std::string& key(std::size_t i) const { return keys_[i]; }

    std::size_t table_count() const { return tables_.size(); }
    std::size_t table_size(std::size_t t) const { return tables_[t].order.size(); }
    std::uint32_t key_at(std::size_t t, std::uint32_t pos) const { return tables_[t].order[pos]; }
    std::uint64_t word_at(std::size_t t, std::uint32_t pos) const { return tables_[t].word[pos]; }
    double uniform_at(std::size_t t, std::uint32_t pos) const;
    double value_at(std::size_t t, std::uint32_t pos) const;  // register-value view
    std::uint8_t exponent_at(std::size_t t, std::uint32_t pos) const;

    // Position of a key in table t (kNoPos when the key is in another part).
    std::uint32_t pos_of_key(std::size_t t, std::uint32_t key) const;
    std::uint32_t part_of(std::uint32_t key) const;  // KPartition only

    // First table position whose key is flagged in `member`, or kNoPos.
    std::uint32_t first_member(std::size_t t, const KeyMask& member) const;

    // First table position at which this register value occurs.
    std::uint32_t pos_of_value(std::size_t t, double value) const;

    // Bit-exact equal to Sketch::of_set over the flagged keys.
    Sketch sketch_of_subset(const KeyMask& member) const;

    // Determining key indices of the full set, ascending.
    std::vector<std::uint32_t> n0_star() const;

private:
    struct Table {
        std::vector<std::uint32_t> order;
        std::vector<std::uint64_t> word;
    };

    SketchConfig cfg_;
    Seed seed_;
    std::vector<std::string> keys_;
    std::vector<Table> tables_;
    std::vector<std::uint32_t> pos_;   // key -> position, (key, t) flat for KMins
    std::vector<std::uint32_t> part_;  // KPartition: key -> part
};

}  // namespace sketchlab
