#pragma once

#include <stdexcept>
#include <string>

namespace superfill {

/// Shapes or dimensions of the operands do not agree.
struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// A parameter is outside its admissible range.
struct ParameterError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// A numerical routine produced non-finite or inconsistent values.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// An internal consistency check failed; indicates a bug, not bad input.
struct InternalError : std::logic_error {
    using std::logic_error::logic_error;
};

/// File could not be read, written or parsed.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace superfill
