#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "sketchlab/rng.hpp"

namespace sketchlab {

// n distinct lowercase strings of the given length, deterministic in rng.
// Rejects lengths with 26^length < 1000*n (collisions would be likely).
std::vector<std::string> generate_keys(std::size_t n, std::size_t length, Rng& rng);

}  // namespace sketchlab
