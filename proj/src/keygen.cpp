#include "sketchlab/keygen.hpp"

#include <cmath>
#include <unordered_set>

#include "sketchlab/errors.hpp"

namespace sketchlab {

std::vector<std::string> generate_keys(std::size_t n, std::size_t length, Rng& rng) {
    if (length == 0) throw ConfigError("key length must be positive");
    // Require 26^length >= 1000 n so collisions stay negligible.
    const double space = std::pow(26.0, static_cast<double>(std::min<std::size_t>(length, 24)));
    if (space < 1000.0 * static_cast<double>(n))
        throw ConfigError("key length too small for a collision-free ground set");
    std::vector<std::string> keys;
    keys.reserve(n);
    std::unordered_set<std::string> seen;
    seen.reserve(n * 2);
    std::string buf(length, 'a');
    while (keys.size() < n) {
        for (auto& c : buf) c = static_cast<char>('a' + rng.below(26));
        if (seen.insert(buf).second) keys.push_back(buf);
    }
    return keys;
}

}  // namespace sketchlab
