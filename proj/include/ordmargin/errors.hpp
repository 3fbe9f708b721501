#pragma once

#include <stdexcept>
#include <string>

namespace ordmargin {

/// Invalid configuration value or inconsistent parameters.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed input data (bad index, bad label, unparsable file line).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A numerical kernel failed (eigendecomposition, conjugate gradient).
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File could not be opened, read or written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace ordmargin
