#pragma once

#include <stdexcept>
#include <string>

namespace noisefit {

// Sample set cannot support estimation (constant input, nonpositive
// moment radicand, too few values).
struct DegenerateSampleError : std::runtime_error {
    explicit DegenerateSampleError(const std::string& what) : std::runtime_error(what) {}
};

// A slice yielded no usable background voxels.
struct NoBackgroundError : std::runtime_error {
    explicit NoBackgroundError(const std::string& what) : std::runtime_error(what) {}
};

// Parameter combination the sampler/generator does not support.
struct UnsupportedCombinationError : std::invalid_argument {
    explicit UnsupportedCombinationError(const std::string& what) : std::invalid_argument(what) {}
};

// Structured file loading failure; message names the offending field.
struct LoadError : std::runtime_error {
    explicit LoadError(const std::string& what) : std::runtime_error(what) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace noisefit
