#pragma once

#include <stdexcept>
#include <string>

namespace mmwsar {

// Base of all library errors so callers can catch everything in one place.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid parameter combinations, malformed configs, incompatible grid setups.
struct ConfigError : Error {
    using Error::Error;
};

// Index or region outside its valid range.
struct RangeError : Error {
    using Error::Error;
};

// Mismatched vector/image/grid dimensions.
struct ShapeError : Error {
    using Error::Error;
};

// Non-finite intermediates or numerically impossible requests.
struct NumericError : Error {
    using Error::Error;
};

// All-zero or otherwise unusable input to an estimator.
struct DegenerateInputError : Error {
    using Error::Error;
};

// Optimizer objective diverged under the configured step size.
struct StepSizeError : NumericError {
    using NumericError::NumericError;
};

// Operation asked of a reconstructor variant that cannot provide it.
struct UnsupportedVariantError : ConfigError {
    using ConfigError::ConfigError;
};

}  // namespace mmwsar
