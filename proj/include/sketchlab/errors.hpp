#pragma once

#include <stdexcept>
#include <string>

namespace sketchlab {

// Invalid configuration or parameter value.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Operation on sketches whose configs/seeds do not match.
struct IncompatibleError : std::runtime_error {
    explicit IncompatibleError(const std::string& msg) : std::runtime_error(msg) {}
};

// Operation invalid for the current sketch/ground state (underflow, incomplete sketch).
struct StateError : std::runtime_error {
    explicit StateError(const std::string& msg) : std::runtime_error(msg) {}
};

// Corrupt or malformed serialized data.
struct SerializationError : std::runtime_error {
    explicit SerializationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Filesystem-level failure.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace sketchlab
