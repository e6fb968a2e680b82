#pragma once

#include <stdexcept>
#include <string>

namespace dataflow {

/// Bad scenario configuration or policy specification.
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// The macroscopic scheme produced non-finite or runaway values.
struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// The microscopic Euler step produced a negative amount beyond tolerance
/// (time step too large).
struct StabilityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace dataflow
